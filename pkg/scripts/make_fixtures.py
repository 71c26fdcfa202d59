"""Regenerate the derivation fixtures in fixtures/ from templates and proof search.

The definition file pi.ccs, the frame chain.json and unsound_cut.proof are written by hand; every
other fixture is produced here and then checked by the kernel.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from opdl import ccs as C
from opdl.frontend import foreign, parse_ccs, parse_formula, parse_program, render_proof
from opdl.opsem import default_registry
from opdl.proofkernel import check_proof
from opdl.prover import Proved, SearchBudget, equiv_certificate, prove_box_equiv
from opdl.templates import derive_template

# Two pn-disjoint leading instructions, and an instruction floated out of a conditional.
CHOR_PAIRS = {
    "chor_swap.proof": ("chor{ p.x -> q.y; r.z -> s.w; q.y -> p.x; 0 }",
                        "chor{ r.z -> s.w; p.x -> q.y; q.y -> p.x; 0 }"),
    "chor_cond.proof": ("chor{ if p.b { r -> s[l]; q.x -> p.y; s.w -> r.z; 0 } else { r -> s[l]; q.y := 0; 0 }; 0 }",
                        "chor{ r -> s[l]; if p.b { q.x -> p.y; s.w -> r.z; 0 } else { q.y := 0; 0 }; 0 }"),
}

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def _write(name: str, d, reg) -> None:
    verdict = check_proof(d, reg=reg)
    if not verdict:
        raise SystemExit(f"{name}: kernel rejected the fixture ({verdict.stage}: {verdict.detail})")
    (ROOT / name).write_text(render_proof(d) + "\n")
    print(f"wrote {name} ({len(d.nodes)} nodes)")


def _equiv(name: str, p, q, reg) -> None:
    left, right = prove_box_equiv(p, q, reg, SearchBudget())
    if not (isinstance(left, Proved) and isinstance(right, Proved)):
        raise SystemExit(f"{name}: proof search failed: {left} / {right}")
    _write(name, equiv_certificate(p, q, left, right, reg), reg)


def main() -> None:
    argparse.ArgumentParser(description=__doc__).parse_args()
    ccs_defs, _ = parse_ccs((ROOT / "pi.ccs").read_text())
    reg = default_registry(ccs_defs)
    plain = default_registry()
    phi, a, b = parse_formula("p"), parse_program("a"), parse_program("b")

    _write("ax_seq.proof", derive_template("A-seq", plain, phi=phi, alpha=a, beta=b), plain)
    _write("ax_choice.proof", derive_template("A-choice", plain, phi=phi, alpha=a, beta=b), plain)
    _write("ax_star.proof", derive_template("A-star", plain, phi=phi, alpha=a), plain)
    _write("loop_invariance.proof",
           derive_template("LI", plain, phi=parse_formula("[a*]q"), alpha=a, hypothesis="prove"), plain)
    for n in range(4):
        _write(f"star_to_{n}.proof",
               derive_template("star-to-n", plain, gamma=[], alpha=a, phi=parse_formula("p | ~p"), n=n), plain)
    _write("axiom_o.proof", derive_template("A_O", reg, phi=phi, alpha=foreign("ccs", C.Name("P1"))), reg)
    _equiv("pi_equiv.proof", foreign("ccs", C.Name("P1")), foreign("ccs", C.Name("P2")), reg)
    for name, (left, right) in CHOR_PAIRS.items():
        _equiv(name, parse_program(left), parse_program(right), reg)


if __name__ == "__main__":
    main()
