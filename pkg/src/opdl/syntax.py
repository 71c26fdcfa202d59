"""Formulas, programs and sequents of operational PDL in negation normal form."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Protocol, Union

from .errors import BudgetExceeded
from .terms import Term

KEYWORDS = frozenset({"true", "false", "skip", "abort", "ccs", "chor"})
EPS = "eps"
_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ATOM_RE = re.compile(r"@?[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*\Z")


def quote_name(name: str, pattern: re.Pattern[str] = _LABEL_RE) -> str:
    if pattern.match(name) and name not in KEYWORDS:
        return name
    return f"`{name}`"


# ---------------------------------------------------------------- programs


class Program(Term):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Terminated(Program):
    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Stuck(Program):
    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Inst(Program):
    name: str

    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Test(Program):
    formula: "Formula"

    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Seq(Program):
    first: Program
    second: Program

    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Star(Program):
    body: Program

    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Choice(Program):
    left: Program
    right: Program

    def _render(self) -> str:
        return _render_prog(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Foreign(Program):
    """A program of a registered operational semantics, e.g. a CCS process."""

    sem: str
    term: Any

    def _render(self) -> str:
        return _render_prog(self, 0)


EPSILON = Terminated()
EMPTY = Stuck()


# ---------------------------------------------------------------- formulas


class Formula(Term):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Top(Formula):
    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Bot(Formula):
    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Pos(Formula):
    name: str

    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Neg(Formula):
    name: str

    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Box(Formula):
    prog: Program
    body: Formula

    def _render(self) -> str:
        return _render_form(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Dia(Formula):
    prog: Program
    body: Formula

    def _render(self) -> str:
        return _render_form(self, 0)


TOP = Top()
BOT = Bot()
Modal = Union[Box, Dia]
Sequent = frozenset  # frozenset[Formula]


# ---------------------------------------------------------------- rendering


def _render_prog(p: Program, level: int) -> str:
    """Levels: 0 choice, 1 sequence, 2 postfix star, 3 atomic."""
    if isinstance(p, Terminated):
        return "skip"
    if isinstance(p, Stuck):
        return "abort"
    if isinstance(p, Inst):
        return quote_name(p.name)
    if isinstance(p, Foreign):
        return f"{p.sem}{{{p.term}}}"
    if isinstance(p, Test):
        return "?" + _render_form(p.formula, 3)
    if isinstance(p, Star):
        return _render_prog(p.body, 2) + "*"
    if isinstance(p, Seq):
        s = _render_prog(p.first, 1) + ";" + _render_prog(p.second, 2)
        return f"({s})" if level > 1 else s
    if isinstance(p, Choice):
        s = _render_prog(p.left, 0) + " + " + _render_prog(p.right, 1)
        return f"({s})" if level > 0 else s
    raise TypeError(p)


def _render_form(f: Formula, level: int) -> str:
    """Levels: 1 disjunction, 2 conjunction, 3 unary."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Pos):
        return quote_name(f.name, _ATOM_RE)
    if isinstance(f, Neg):
        return "~" + quote_name(f.name, _ATOM_RE)
    if isinstance(f, Box):
        return f"[{_render_prog(f.prog, 0)}]{_render_form(f.body, 3)}"
    if isinstance(f, Dia):
        return f"<{_render_prog(f.prog, 0)}>{_render_form(f.body, 3)}"
    if isinstance(f, Or):
        s = _render_form(f.left, 1) + " | " + _render_form(f.right, 2)
        return f"({s})" if level > 1 else s
    if isinstance(f, And):
        s = _render_form(f.left, 2) + " & " + _render_form(f.right, 3)
        return f"({s})" if level > 2 else s
    raise TypeError(f)


def render_sequent(gamma: Iterable[Formula]) -> str:
    return ", ".join(str(f) for f in sort_formulas(gamma))


def sort_formulas(gamma: Iterable[Formula]) -> list[Formula]:
    """Deterministic order used wherever a choice among formulas is made."""
    return sorted(gamma, key=lambda f: (len(str(f)), str(f)))


# ---------------------------------------------------------------- operations


def negate(f: Formula) -> Formula:
    if isinstance(f, Top):
        return BOT
    if isinstance(f, Bot):
        return TOP
    if isinstance(f, Pos):
        return Neg(f.name)
    if isinstance(f, Neg):
        return Pos(f.name)
    if isinstance(f, Or):
        return And(negate(f.left), negate(f.right))
    if isinstance(f, And):
        return Or(negate(f.left), negate(f.right))
    if isinstance(f, Box):
        return Dia(f.prog, negate(f.body))
    if isinstance(f, Dia):
        return Box(f.prog, negate(f.body))
    raise TypeError(f)


def mk_implies(f: Formula, g: Formula) -> Formula:
    return Or(negate(f), g)


def mk_iff(f: Formula, g: Formula) -> Formula:
    return And(mk_implies(f, g), mk_implies(g, f))


def sequent(*fs: Formula) -> frozenset[Formula]:
    return frozenset(fs)


def size(x: Formula | Program) -> int:
    """Number of constructors; foreign terms count as one."""
    if isinstance(x, (Top, Bot, Pos, Neg, Terminated, Stuck, Inst, Foreign)):
        return 1
    if isinstance(x, (Or, And)):
        return 1 + size(x.left) + size(x.right)
    if isinstance(x, (Box, Dia)):
        return 1 + size(x.prog) + size(x.body)
    if isinstance(x, Test):
        return 1 + size(x.formula)
    if isinstance(x, Seq):
        return 1 + size(x.first) + size(x.second)
    if isinstance(x, Choice):
        return 1 + size(x.left) + size(x.right)
    if isinstance(x, Star):
        return 1 + size(x.body)
    raise TypeError(x)


def atoms_of(x: Formula | Program) -> set[str]:
    out: set[str] = set()
    _collect(x, out, set())
    return out


def labels_of(x: Formula | Program) -> set[str]:
    out: set[str] = set()
    _collect(x, set(), out)
    return out


def _collect(x: Formula | Program, atoms: set[str], labels: set[str]) -> None:
    if isinstance(x, (Pos, Neg)):
        atoms.add(x.name)
    elif isinstance(x, Inst):
        labels.add(x.name)
    elif isinstance(x, (Or, And, Choice)):
        _collect(x.left, atoms, labels)
        _collect(x.right, atoms, labels)
    elif isinstance(x, (Box, Dia)):
        _collect(x.prog, atoms, labels)
        _collect(x.body, atoms, labels)
    elif isinstance(x, Test):
        _collect(x.formula, atoms, labels)
    elif isinstance(x, Seq):
        _collect(x.first, atoms, labels)
        _collect(x.second, atoms, labels)
    elif isinstance(x, Star):
        _collect(x.body, atoms, labels)


def program_power(alpha: Program, n: int) -> Program:
    """alpha^0 = skip, alpha^1 = alpha, alpha^n = alpha;alpha^(n-1)."""
    if n == 0:
        return EPSILON
    if n == 1:
        return alpha
    return Seq(alpha, program_power(alpha, n - 1))


def big_or(fs: Iterable[Formula]) -> Formula:
    items = list(fs)
    if not items:
        return BOT
    out = items[0]
    for f in items[1:]:
        out = Or(out, f)
    return out


# ---------------------------------------------------------------- closure


class StepSource(Protocol):
    def logic_steps(self, prog: Program) -> list[tuple[Program, Program]]: ...


def fl_successors(
    f: Formula, reg: StepSource | None = None, kleene_operational: bool = False
) -> list[Formula]:
    """One-step closure rules: the formulas a single rule adds for ``f``."""
    if isinstance(f, (Or, And)):
        return [f.left, f.right]
    if not isinstance(f, (Box, Dia)):
        return []
    mk = Box if isinstance(f, Box) else Dia
    p, body = f.prog, f.body
    out: list[Formula] = [body]
    if isinstance(p, Test):
        # the test rules' actual premises, so derivations stay inside the closure
        out.append(p.formula)
        out.append(Or(negate(p.formula), body) if mk is Box else And(p.formula, body))
    elif isinstance(p, Choice):
        out += [mk(p.left, body), mk(p.right, body)]
    elif isinstance(p, Seq):
        out.append(mk(p.first, mk(p.second, body)))
    elif isinstance(p, Star):
        out.append(mk(p.body, f))
    if isinstance(p, Foreign) or (kleene_operational and not isinstance(p, (Terminated, Foreign))):
        if reg is None:
            raise ValueError("foreign program closure needs a registry")
        for beta, gamma in reg.logic_steps(p):
            out.append(mk(beta, mk(gamma, body)))
    return out


def fl_closure(
    gamma: Iterable[Formula],
    reg: StepSource | None = None,
    max_size: int = 100_000,
    kleene_operational: bool = False,
) -> frozenset[Formula]:
    """Least superset of ``gamma`` closed under the closure rules.

    Foreign programs are unfolded through ``reg``. With ``kleene_operational``
    regular programs are additionally unfolded through their operational
    steps. Raises BudgetExceeded when the closure outgrows ``max_size``.
    """
    seen: set[Formula] = set(gamma)
    if len(seen) > max_size:
        raise BudgetExceeded("closure", max_size)
    todo = list(seen)
    while todo:
        f = todo.pop()
        for g in fl_successors(f, reg, kleene_operational):
            if g not in seen:
                seen.add(g)
                if len(seen) > max_size:
                    raise BudgetExceeded("closure", max_size)
                todo.append(g)
    return frozenset(seen)
