"""Command-line entry point.

Exit codes: 0 success or the property holds, 1 checked and fails, 2 usage
or parse error, 3 budget exhausted.  Atoms and labels missing from a frame
are read as empty, so every formula evaluates on every frame.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable

from . import ccs as C
from . import chor as H
from .cutelim import CutElimError, eliminate
from .derivation import Derivation, from_tree, proof_to_dot
from .errors import BudgetExceeded, OpdlError
from .frontend import (
    ParseError,
    foreign,
    parse_ccs,
    parse_ccs_process,
    parse_chor,
    parse_chor_term,
    parse_formula,
    parse_program,
    parse_proof,
    parse_sequent,
    render_proof,
)
from .kripke import KripkeFrame, NotFound, eval_formula, find_countermodel
from .opsem import (
    Distinguished,
    Equivalent,
    Included,
    OpSemRegistry,
    default_registry,
    explore,
    lts_to_dot,
    trace_equiv,
    trace_included,
    trace_str,
    traces_upto,
)
from .proofkernel import KernelOptions, check_local, check_progress
from .prover import Exhausted, Proved, SearchBudget, prove, prove_box_equiv
from .syntax import Formula, Or, Program, render_sequent
from .templates import TEMPLATES, TemplateError, derive_template

OK, FAILS, USAGE, BUDGET = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _text(arg: str) -> str:
    """The argument itself, or a file's contents when it names an existing file."""
    if "\n" in arg:
        return arg
    try:
        p = Path(arg)
        return p.read_text() if p.is_file() else arg
    except OSError:
        return arg


class _Env:
    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.ccs_defs = parse_ccs(Path(args.ccs).read_text())[0] if args.ccs else C.CcsDefs()
        self.chor_defs = parse_chor(Path(args.chor).read_text())[0] if args.chor else H.ChorDefs()
        self.reg: OpSemRegistry = default_registry(self.ccs_defs, self.chor_defs)

    def program(self, text: str) -> Program:
        """A program, or the name of a CCS/choreography definition from the loaded files."""
        if text in self.ccs_defs:
            return foreign("ccs", C.Name(text))
        if text in self.chor_defs:
            return foreign("chor", H.Call(text))
        return parse_program(text)

    def budget(self) -> SearchBudget:
        b = SearchBudget(atomic_k=self.args.atomic_k)
        if self.args.budget is not None:
            b = SearchBudget(self.args.budget, b.max_depth, b.max_states, b.atomic_k)
        if self.args.depth is not None:
            b = SearchBudget(b.max_distinct_sequents, self.args.depth, b.max_states, b.atomic_k)
        return b

    def opts(self) -> KernelOptions:
        return KernelOptions(atomic_k=self.args.atomic_k, allow_open=self.args.allow_open)


# ---------------------------------------------------------------- subcommands

_KINDS: dict[str, Callable[[str], Any]] = {
    "formula": parse_formula,
    "program": parse_program,
    "sequent": parse_sequent,
    "ccs": parse_ccs_process,
    "ccs-defs": lambda t: parse_ccs(t)[0],
    "chor": parse_chor_term,
    "chor-defs": lambda t: parse_chor(t)[0],
    "proof": parse_proof,
}


def _show(x: Any) -> str:
    if isinstance(x, Derivation):
        return render_proof(x)
    if isinstance(x, frozenset):
        return render_sequent(x)
    if isinstance(x, (C.CcsDefs, H.ChorDefs)):
        return x.render()
    return str(x)


def cmd_parse(env: _Env, a: argparse.Namespace) -> int:
    x = _KINDS[a.kind](_text(a.input))
    print(_show(x))
    return OK


def cmd_render(env: _Env, a: argparse.Namespace) -> int:
    d = parse_proof(_text(a.input))
    print(proof_to_dot(d) if a.dot else render_proof(d))
    return OK


def cmd_lts(env: _Env, a: argparse.Namespace) -> int:
    p = env.program(a.term)
    sem, state = env.reg.semantics_for(p)
    lts = explore(state, sem, a.max_states)
    if a.dot:
        print(lts_to_dot(lts))
    else:
        for i, s in enumerate(lts.states):
            mark = " (terminated)" if i in lts.terminal else ""
            print(f"s{i}: {s}{mark}")
        for s, lab, t in lts.edges:
            print(f"s{s} -{lab}-> s{t}")
    if lts.truncated:
        print(f"truncated at {a.max_states} states")
        return BUDGET
    return OK


def cmd_traces(env: _Env, a: argparse.Namespace) -> int:
    p = env.program(a.term)
    sem, state = env.reg.semantics_for(p)
    n = a.depth if a.depth is not None else 4
    got = traces_upto(state, sem, n, mode=a.mode)
    for t in sorted(got, key=lambda t: (len(t), [str(x) for x in t])):
        print(trace_str(t))
    return OK


def _sems(env: _Env, p: Program, q: Program) -> tuple[Any, Any, Any, Any]:
    sp, xp = env.reg.semantics_for(p)
    sq, xq = env.reg.semantics_for(q)
    return xp, xq, sp, sq


def cmd_equiv(env: _Env, a: argparse.Namespace) -> int:
    xp, xq, sp, sq = _sems(env, env.program(a.left), env.program(a.right))
    got = trace_equiv(xp, xq, sp, sq)
    if isinstance(got, Equivalent):
        print("equivalent")
        return OK
    if isinstance(got, Distinguished):
        print(f"distinguished by {got} (a trace of the {got.side} side only)")
        return FAILS
    print(f"inconclusive: {got.reason}")
    return BUDGET


def cmd_included(env: _Env, a: argparse.Namespace) -> int:
    xp, xq, sp, sq = _sems(env, env.program(a.left), env.program(a.right))
    got = trace_included(xp, xq, sp, sq)
    if isinstance(got, Included):
        print("included")
        return OK
    if hasattr(got, "trace"):
        print(f"counterexample: {got}")
        return FAILS
    print(f"inconclusive: {got.reason}")  # type: ignore[union-attr]
    return BUDGET


def cmd_mc(env: _Env, a: argparse.Namespace) -> int:
    if not a.frame:
        raise _Usage("mc needs --frame FILE")
    frame = KripkeFrame.from_json(Path(a.frame).read_text())
    f = _formula_or_sequent(a.formula)
    holds = eval_formula(frame, f, env.reg)
    worlds = [i for i in range(frame.n) if holds[i]]
    print("holds at: " + (" ".join(map(str, worlds)) if worlds else "none"))
    if len(worlds) == frame.n:
        print("valid on the frame")
        return OK
    print("not valid on the frame")
    return FAILS


def _formula_or_sequent(text: str) -> Formula:
    fs = sorted(parse_sequent(text), key=str)
    if not fs:
        raise _Usage("empty formula")
    out = fs[0]
    for g in fs[1:]:
        out = Or(out, g)
    return out


def cmd_countermodel(env: _Env, a: argparse.Namespace) -> int:
    f = _formula_or_sequent(a.formula)
    got = find_countermodel(f, env.reg, max_worlds=a.worlds, seed=a.seed)
    if isinstance(got, NotFound):
        print("no countermodel found")
        return OK
    frame, world = got
    print(f"countermodel: world {world} of {frame.n}")
    print(frame.to_json())
    return FAILS


def cmd_check(env: _Env, a: argparse.Namespace) -> int:
    d = parse_proof(_text(a.input))
    if a.dot:
        print(proof_to_dot(d))
    local = check_local(d, env.reg, env.opts())
    if not local:
        print(f"local: FAIL ({local})")
        return FAILS
    print("local: ok")
    prog = check_progress(d, env.reg)
    if not prog:
        print(f"progress: FAIL (lasso: {prog.lasso.describe(d)})")  # type: ignore[union-attr]
        return FAILS
    print("progress: ok")
    if d.open_nodes():
        print(f"open premises: {len(d.open_nodes())}")
    return OK


def cmd_prove(env: _Env, a: argparse.Namespace) -> int:
    goal = parse_sequent(_text(a.sequent))
    got = prove(goal, env.reg, env.budget())
    if isinstance(got, Proved):
        print("proved")
        print(proof_to_dot(got.derivation) if a.dot else render_proof(got.derivation))
        return OK
    if isinstance(got, Exhausted):
        print(f"exhausted: {got.reason}")
        return BUDGET
    print("not proved")
    for s in got.stuck[:5]:
        print(f"stuck at: {render_sequent(s)}")
    return FAILS


def cmd_prove_equiv(env: _Env, a: argparse.Namespace) -> int:
    p, q = env.program(a.left), env.program(a.right)
    results = prove_box_equiv(p, q, env.reg, env.budget())
    code = OK
    for name, r in zip(("left-to-right", "right-to-left"), results):
        if isinstance(r, Proved):
            print(f"{name}: proved ({len(r.derivation.nodes)} nodes)")
            if a.dot:
                print(proof_to_dot(r.derivation))
        elif isinstance(r, Exhausted):
            print(f"{name}: exhausted ({r.reason})")
            code = max(code, BUDGET) if code != FAILS else code
        else:
            trace = f" by {trace_str(r.trace)}" if r.trace is not None else ""
            print(f"{name}: failed{trace}")
            code = FAILS
    print("equivalent" if code == OK else "not equivalent" if code == FAILS else "inconclusive")
    return code


def cmd_cutelim(env: _Env, a: argparse.Namespace) -> int:
    d = parse_proof(_text(a.input))
    depth = a.depth if a.depth is not None else 1
    got = eliminate(d, depth, a.fuel, env.reg)
    trace = got.trace
    if a.trace:
        for i, t in enumerate(trace.derivations):
            if i:
                path, step = trace.log[i - 1]
                print(f"; step {i}: {step} at {'.'.join(map(str, path)) or 'root'}")
            print(render_proof(from_tree(t)))
    print(f"steps: {len(trace)}")
    if not got:
        print("fuel exhausted")
        print(render_proof(from_tree(got.partial)))  # type: ignore[union-attr]
        return BUDGET
    remaining = got.final.count_rule("cut")  # type: ignore[union-attr]
    print(f"remaining cuts: {remaining}")
    print(render_proof(from_tree(got.cf)))  # type: ignore[union-attr]
    return OK


def _binding(env: _Env, key: str, value: str) -> Any:
    if key in ("phi", "psi"):
        return parse_formula(value)
    if key in ("alpha", "beta"):
        return env.program(value)
    if key == "gamma":
        return sorted(parse_sequent(value), key=str)
    if key == "n":
        return int(value)
    if key.startswith("hypothesis"):
        return value
    raise _Usage(f"unknown binding {key!r}")


def cmd_template(env: _Env, a: argparse.Namespace) -> int:
    if a.name not in TEMPLATES:
        raise _Usage(f"unknown template {a.name!r}; known: {', '.join(TEMPLATES)}")
    bindings = {}
    for item in a.bindings:
        if "=" not in item:
            raise _Usage(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        bindings[k] = _binding(env, k, v)
    d = derive_template(a.name, env.reg, **bindings)
    print(proof_to_dot(d) if a.dot else render_proof(d))
    return OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ccs", metavar="FILE", help="CCS definitions X := P")
    common.add_argument("--chor", metavar="FILE", help="choreography definitions X := C")
    common.add_argument("--frame", metavar="FILE", help="Kripke frame in JSON")
    common.add_argument("--budget", type=int, metavar="N", help="distinct sequents for proof search")
    common.add_argument("--depth", type=int, metavar="N", help="search depth, trace length or unfolding depth")
    common.add_argument("--fuel", type=int, default=10_000, metavar="N", help="cut-elimination steps")
    common.add_argument("--atomic-k", action="store_true", help="restrict K to atomic programs")
    common.add_argument("--allow-open", action="store_true", help="accept open premises when checking")
    common.add_argument("--dot", action="store_true", help="emit Graphviz output")
    common.add_argument("--trace", action="store_true", help="print every derivation of a reduction")
    common.add_argument("--seed", type=int, default=0, metavar="N")

    ap = argparse.ArgumentParser(prog="opdl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add(name: str, fn: Callable[[_Env, argparse.Namespace], int], help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(fn=fn)
        return p

    p = add("parse", cmd_parse, "parse and print in canonical syntax")
    p.add_argument("kind", choices=sorted(_KINDS))
    p.add_argument("input", help="text or a file name")
    p = add("render", cmd_render, "re-render a proof script")
    p.add_argument("input")
    p = add("lts", cmd_lts, "explore the transition system of a program")
    p.add_argument("term")
    p.add_argument("--max-states", type=int, default=10_000)
    p = add("traces", cmd_traces, "list traces up to --depth")
    p.add_argument("term")
    p.add_argument("--mode", choices=("prefix", "complete"), default="prefix")
    p = add("equiv", cmd_equiv, "decide trace equivalence")
    p.add_argument("left")
    p.add_argument("right")
    p = add("included", cmd_included, "decide whether the right traces are among the left ones")
    p.add_argument("left")
    p.add_argument("right")
    p = add("mc", cmd_mc, "evaluate a formula on a frame")
    p.add_argument("formula")
    p = add("countermodel", cmd_countermodel, "search small frames refuting a formula or sequent")
    p.add_argument("formula")
    p.add_argument("--worlds", type=int, default=3)
    p = add("check", cmd_check, "check a proof script")
    p.add_argument("input")
    p = add("prove", cmd_prove, "search for a cut-free cyclic proof")
    p.add_argument("sequent")
    p = add("prove-equiv", cmd_prove_equiv, "certify [p]phi <-> [q]phi by proof search")
    p.add_argument("left")
    p.add_argument("right")
    p = add("cutelim", cmd_cutelim, "eliminate cuts from a finite unfolding")
    p.add_argument("input")
    p = add("template", cmd_template, "instantiate a derivation template")
    p.add_argument("name")
    p.add_argument("bindings", nargs="*", help="key=value with keys phi psi alpha beta gamma n hypothesis")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        env = _Env(args)
        return args.fn(env, args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return USAGE
    except (_Usage, TemplateError, CutElimError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}")
        return BUDGET
    except OpdlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
