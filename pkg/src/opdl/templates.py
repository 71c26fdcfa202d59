"""Schematic derivations: the PDL axioms, loop invariance, star-to-power, MP, NEC and A_O."""

from __future__ import annotations

from dataclasses import replace
from typing import Any, Callable

from .derivation import Derivation
from .opsem import OpSemRegistry
from .syntax import (
    And,
    Box,
    Choice,
    Dia,
    Formula,
    Or,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Test,
    big_or,
    mk_iff,
    mk_implies,
    negate,
    program_power,
)
from .tactics import Close, Cut, K, Keep, Loop, Open, R, Tac, build


class TemplateError(ValueError):
    pass


def retag(t: Tac, prefix: str) -> Tac:
    """Copy of a script with every tag and loop target prefixed."""
    return replace(
        t,
        kids=tuple(retag(k, prefix) for k in t.kids),
        tag=None if t.tag is None else prefix + t.tag,
        target=None if t.target is None else prefix + t.target,
    )


def _hypothesis(goal: frozenset[Formula], how: Any, reg: OpSemRegistry, prefix: str) -> Tac:
    """Close a hypothesis: a given script, 'open', or 'prove' (open when search fails)."""
    if isinstance(how, Tac):
        return retag(how, prefix)
    if how == "open":
        return Open()
    if how not in ("prove", "prove-atomic"):
        raise TemplateError(f"hypothesis must be 'prove', 'prove-atomic', 'open' or a script, not {how!r}")
    from .prover import Proved, SearchBudget, prove

    budget = SearchBudget(max_distinct_sequents=5_000, max_depth=60, atomic_k=how == "prove-atomic")
    got = prove(goal, reg, budget)
    return retag(got.script, prefix) if isinstance(got, Proved) else Open()


def _conj_close(f: Formula, depth: int | None = None) -> Tac:
    """Split a left-nested conjunction chain ``depth`` levels deep and close every branch."""
    if isinstance(f, And) and depth != 0:
        left = _conj_close(f.left, None if depth is None else depth - 1)
        right = _conj_close(f.right, None) if depth is None else Close()
        return R("and", f, left, right)
    return Close()


def _iff(a: Formula, b: Formula, left: Tac, right: Tac) -> tuple[Formula, Tac]:
    """⊢ a ⇔ b from scripts for ⊢ ¬a, b and ⊢ ¬b, a."""
    f = mk_iff(a, b)
    return f, R("and", f, R("or", f.left, left), R("or", f.right, right))  # type: ignore[attr-defined]


def _need(b: dict[str, Any], *names: str) -> list[Any]:
    missing = [n for n in names if n not in b]
    if missing:
        raise TemplateError(f"missing bindings: {', '.join(missing)}")
    return [b[n] for n in names]


# ---------------------------------------------------------------- axioms


def _a_empty(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    (phi,) = _need(b, "phi")
    return frozenset({Box(Stuck(), phi)}), R("box_empty")


def _neg(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, alpha = _need(b, "phi", "alpha")
    box = Box(alpha, phi)
    f, t = _iff(box, negate(Dia(alpha, negate(phi))), Close(), Close())
    return frozenset({f}), t


def _k(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, psi, alpha = _need(b, "phi", "psi", "alpha")
    f = mk_implies(Box(alpha, mk_implies(phi, psi)), mk_implies(Box(alpha, phi), Box(alpha, psi)))
    inner = And(phi, negate(psi))
    t = R("or", f, R("or", f.right, K(alpha, R("and", inner, Close(), Close()))))  # type: ignore[attr-defined]
    return frozenset({f}), t


def _a_eps(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    (phi,) = _need(b, "phi")
    e = Terminated()
    f, t = _iff(Box(e, phi), phi,
                Keep([Dia(e, negate(phi)), phi], R("dia_eps", Dia(e, negate(phi)), Close())),
                Keep([negate(phi), Box(e, phi)], R("box_eps", Box(e, phi), Close())))
    return frozenset({f}), t


def _a_test(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, psi = _need(b, "phi", "psi")
    box = Box(Test(psi), phi)
    rhs = Or(negate(psi), phi)
    dia = Dia(Test(psi), negate(phi))
    conj = And(psi, negate(phi))
    left = R("or", rhs, R("dia_test", dia, R("and", conj, Close(), Close())))
    right = R("box_test", box, Close())
    f, t = _iff(box, rhs, left, right)
    return frozenset({f}), t


def _a_choice(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, alpha, beta = _need(b, "phi", "alpha", "beta")
    box = Box(Choice(alpha, beta), phi)
    rhs = And(Box(alpha, phi), Box(beta, phi))
    dia = Dia(Choice(alpha, beta), negate(phi))
    left = R("dia_choice", dia, R("and", rhs, Close(), Close()))
    nr = negate(rhs)
    right = R("or", nr, R("box_choice", box, Close(), Close()))
    f, t = _iff(box, rhs, left, right)
    return frozenset({f}), t


def _a_seq(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, alpha, beta = _need(b, "phi", "alpha", "beta")
    box = Box(Seq(alpha, beta), phi)
    rhs = Box(alpha, Box(beta, phi))
    left = R("dia_seq", Dia(Seq(alpha, beta), negate(phi)), Close())
    right = R("box_seq", box, Close())
    f, t = _iff(box, rhs, left, right)
    return frozenset({f}), t


def _a_star(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, alpha = _need(b, "phi", "alpha")
    box = Box(Star(alpha), phi)
    unf = Box(alpha, box)
    rhs = And(phi, unf)
    dia = Dia(Star(alpha), negate(phi))
    left = R("dia_star", dia, R("and", rhs, Close(), Close()))
    nr = negate(rhs)
    right = R("or", nr, R("box_star", box, Close(), Close()))
    f, t = _iff(box, rhs, left, right)
    return frozenset({f}), t


# ---------------------------------------------------------------- rules and lemmas


def _li(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    """Loop invariance: ⊢ ¬φ, [α*]φ from ⊢ ¬φ, [α]φ, with one back-edge."""
    phi, alpha = _need(b, "phi", "alpha")
    nphi = negate(phi)
    st = Star(alpha)
    bs = Box(st, phi)
    step = Or(nphi, Box(alpha, phi))
    chi = Box(st, step)
    x = negate(step)
    hyp = _hypothesis(frozenset({nphi, Box(alpha, phi)}), b.get("hypothesis", "prove"), reg, "h_")
    left = Keep([chi], K(st, R("or", step, hyp)))
    right = R("box_star", bs,
              Close(),
              R("dia_star", Dia(st, x),
                R("and", x,
                  Close(),
                  Keep([Dia(alpha, nphi), Dia(alpha, Dia(st, x)), Box(alpha, bs)],
                       K(alpha, Loop("li"), principal=Box(alpha, bs))))),
              tag="li")
    return frozenset({nphi, bs}), Cut(chi, left, right)


def _d_prime(alpha: Program, phi: Formula, n: int) -> Tac:
    """⊢ ⟨α*⟩¬φ, [αⁿ]φ."""
    st = Star(alpha)
    nphi = negate(phi)
    dia = Dia(st, nphi)
    seq_dia = Dia(Seq(alpha, st), nphi)
    if n == 0:
        return R("dia_star", dia, Keep([nphi, Box(Terminated(), phi)],
                                       R("box_eps", Box(Terminated(), phi), Close())), star_form="seq")
    box = Box(program_power(alpha, n), phi)
    if n > 1:
        kstep = R("box_seq", box, K(alpha, _d_prime(alpha, phi, n - 1)))
    else:
        kstep = K(alpha, R("dia_star", dia, Close(), star_form="seq"))
    return R("dia_star", dia,
             Keep([seq_dia, box], R("dia_seq", seq_dia, kstep)),
             star_form="seq")


def _star_to_n(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    """⊢ Γ, [αⁿ]φ from ⊢ Γ, [α*]φ by a cut on (⋁Γ) ∨ [α*]φ."""
    gamma, alpha, phi, n = _need(b, "gamma", "alpha", "phi", "n")
    gamma = list(dict.fromkeys(gamma))
    if n < 0:
        raise TemplateError("n must be non-negative")
    bs = Box(Star(alpha), phi)
    target = Box(program_power(alpha, n), phi)
    hyp = _hypothesis(frozenset(gamma) | {bs}, b.get("hypothesis", "prove"), reg, "h_")
    if gamma:
        g = big_or(gamma)
        chi: Formula = Or(g, bs)
        ors = _split_or(g, hyp, len(gamma) - 1)
        left = Keep([chi], R("or", chi, ors))
        ng = negate(g)
        right = R("and", negate(chi),
                  Keep([ng] + gamma, _conj_close(ng, len(gamma) - 1)),
                  Keep([Dia(Star(alpha), negate(phi)), target], _d_prime(alpha, phi, n)))
    else:
        chi = bs
        left = Keep([chi], hyp)
        right = Keep([Dia(Star(alpha), negate(phi)), target], _d_prime(alpha, phi, n))
    return frozenset(gamma) | {target}, Cut(chi, left, right)


def _split_or(g: Formula, kid: Tac, depth: int | None = None) -> Tac:
    """Decompose a left-nested disjunction chain built by big_or, ``depth`` levels deep."""
    if isinstance(g, Or) and depth != 0:
        return R("or", g, _split_or(g.left, kid, None if depth is None else depth - 1))
    return kid


def _mp(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    """⊢ ψ from ⊢ φ and ⊢ φ ⇒ ψ with two cuts."""
    phi, psi = _need(b, "phi", "psi")
    imp = mk_implies(phi, psi)
    h1 = _hypothesis(frozenset({phi}), b.get("hypothesis1", "prove"), reg, "h1_")
    h2 = _hypothesis(frozenset({imp}), b.get("hypothesis2", "prove"), reg, "h2_")
    conj = negate(imp)
    inner = Cut(imp, Keep([imp], h2), R("and", conj, Close(), Close()))
    return frozenset({psi}), Cut(phi, Keep([phi], h1), inner)


def _nec(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    phi, alpha = _need(b, "phi", "alpha")
    if isinstance(alpha, Stuck):
        return frozenset({Box(alpha, phi)}), R("box_empty")
    hyp = _hypothesis(frozenset({phi}), b.get("hypothesis", "prove"), reg, "h_")
    return frozenset({Box(alpha, phi)}), K(alpha, hyp)


def _a_o(b: dict[str, Any], reg: OpSemRegistry) -> tuple[frozenset[Formula], Tac]:
    """⊢ [P]φ ⇔ ⋀ᵢ [βᵢ][γᵢ]φ for a foreign (or regular) program P."""
    phi, alpha = _need(b, "phi", "alpha")
    steps = reg.logic_steps(alpha)
    box = Box(alpha, phi)
    if not steps:
        return frozenset({box}), R("box_O", box)
    boxes = [Box(bt, Box(g, phi)) for bt, g in steps]
    rhs = boxes[0]
    for x in boxes[1:]:
        rhs = And(rhs, x)
    dia = Dia(alpha, negate(phi))
    left = R("dia_O", dia, _conj_split(rhs))
    nr = negate(rhs)
    right = R("box_O", box, *[_split_or(nr, Close()) if isinstance(nr, Or) else Close() for _ in boxes])
    f, t = _iff(box, rhs, left, right)
    return frozenset({f}), t


def _conj_split(f: Formula) -> Tac:
    if isinstance(f, And):
        return R("and", f, _conj_split(f.left), _conj_split(f.right))
    return Close()


TEMPLATES: dict[str, Callable[[dict[str, Any], OpSemRegistry], tuple[frozenset[Formula], Tac]]] = {
    "A-empty": _a_empty,
    "Neg": _neg,
    "K": _k,
    "A-eps": _a_eps,
    "A-test": _a_test,
    "A-choice": _a_choice,
    "A-seq": _a_seq,
    "A-star": _a_star,
    "LI": _li,
    "star-to-n": _star_to_n,
    "MP": _mp,
    "NEC": _nec,
    "A_O": _a_o,
}


def template_script(name: str, reg: OpSemRegistry | None = None, **bindings: Any) -> tuple[frozenset[Formula], Tac]:
    if name not in TEMPLATES:
        raise TemplateError(f"unknown template {name!r}; known: {', '.join(TEMPLATES)}")
    return TEMPLATES[name](bindings, reg if reg is not None else OpSemRegistry())


def derive_template(name: str, reg: OpSemRegistry | None = None, **bindings: Any) -> Derivation:
    """Instantiate a template.  Hypotheses default to 'prove' and stay open when search fails."""
    reg = reg if reg is not None else OpSemRegistry()
    seq, script = template_script(name, reg, **bindings)
    return build(seq, script, reg)
