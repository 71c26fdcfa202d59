"""CCS processes, their transition rules, guardedness, and the CCS semantics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .errors import RegistryError, UnboundName
from .syntax import EPSILON, Inst, Program
from .terms import Term

CCS_KEYWORDS = frozenset({"tau", "new", "in"})


# ---------------------------------------------------------------- actions


class CcsAction(Term):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Act(CcsAction):
    name: str

    def _render(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False, repr=False)
class CoAct(CcsAction):
    name: str

    def _render(self) -> str:
        return "'" + self.name


@dataclass(frozen=True, eq=False, repr=False)
class Tau(CcsAction):
    def _render(self) -> str:
        return "tau"


TAU = Tau()


def co(a: CcsAction) -> CcsAction:
    if isinstance(a, Act):
        return CoAct(a.name)
    if isinstance(a, CoAct):
        return Act(a.name)
    return a


# ---------------------------------------------------------------- processes


class CcsProcess(Term):
    def _render(self) -> str:
        return _render(self, 0)


@dataclass(frozen=True, eq=False, repr=False)
class Nil(CcsProcess):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Prefix(CcsProcess):
    act: CcsAction
    body: CcsProcess


@dataclass(frozen=True, eq=False, repr=False)
class Par(CcsProcess):
    left: CcsProcess
    right: CcsProcess


@dataclass(frozen=True, eq=False, repr=False)
class Sum(CcsProcess):
    left: CcsProcess
    right: CcsProcess


@dataclass(frozen=True, eq=False, repr=False)
class Restrict(CcsProcess):
    name: str
    body: CcsProcess


@dataclass(frozen=True, eq=False, repr=False)
class Name(CcsProcess):
    ident: str


NIL = Nil()


def _render(p: CcsProcess, level: int) -> str:
    """Levels: 0 parallel, 1 sum, 2 prefix and atoms."""
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Name):
        return p.ident
    if isinstance(p, Prefix):
        return f"{p.act}.{_render(p.body, 2)}"
    if isinstance(p, Restrict):
        return f"new {p.name} in {_render(p.body, 2)}"
    if isinstance(p, Sum):
        s = f"{_render(p.left, 1)} + {_render(p.right, 2)}"
        return f"({s})" if level > 1 else s
    if isinstance(p, Par):
        s = f"{_render(p.left, 0)} | {_render(p.right, 1)}"
        return f"({s})" if level > 0 else s
    raise TypeError(p)


class CcsDefs(dict):
    """Process definitions ``X := P``."""

    def render(self) -> str:
        return "\n".join(f"{k} := {v}" for k, v in self.items())


# ---------------------------------------------------------------- semantics


def ccs_step(p: CcsProcess, defs: CcsDefs) -> set[tuple[CcsAction, CcsProcess]]:
    """All transitions of ``p`` by the prefix, parallel, sum, restriction and recursion rules."""
    if isinstance(p, Nil):
        return set()
    if isinstance(p, Prefix):
        return {(p.act, p.body)}
    if isinstance(p, Sum):
        return ccs_step(p.left, defs) | ccs_step(p.right, defs)
    if isinstance(p, Par):
        left = ccs_step(p.left, defs)
        right = ccs_step(p.right, defs)
        out = {(a, Par(l2, p.right)) for a, l2 in left}
        out |= {(a, Par(p.left, r2)) for a, r2 in right}
        for a, l2 in left:
            if isinstance(a, Tau):
                continue
            for b, r2 in right:
                if b == co(a):
                    out.add((TAU, Par(l2, r2)))
        return out
    if isinstance(p, Restrict):
        return {
            (a, Restrict(p.name, q))
            for a, q in ccs_step(p.body, defs)
            if isinstance(a, Tau) or a.name != p.name  # type: ignore[attr-defined]
        }
    if isinstance(p, Name):
        if p.ident not in defs:
            raise UnboundName(p.ident)
        return ccs_step(defs[p.ident], defs)
    raise TypeError(p)


def is_inert(p: CcsProcess) -> bool:
    """Structurally terminated: built from 0 by parallel, sum and restriction."""
    if isinstance(p, Nil):
        return True
    if isinstance(p, (Par, Sum)):
        return is_inert(p.left) and is_inert(p.right)
    if isinstance(p, Restrict):
        return is_inert(p.body)
    return False


@dataclass(frozen=True)
class Ok:
    pass


@dataclass(frozen=True)
class Unguarded:
    name: str
    path: list[str]


def _unguarded_refs(p: CcsProcess, path: list[str]) -> Iterator[tuple[str, list[str]]]:
    if isinstance(p, Name):
        yield p.ident, path
    elif isinstance(p, Sum):
        yield from _unguarded_refs(p.left, path + ["Sum-left"])
        yield from _unguarded_refs(p.right, path + ["Sum-right"])
    elif isinstance(p, Par):
        yield from _unguarded_refs(p.left, path + ["Par-left"])
        yield from _unguarded_refs(p.right, path + ["Par-right"])
    elif isinstance(p, Restrict):
        yield from _unguarded_refs(p.body, path + ["Res"])


def check_guarded(defs: CcsDefs) -> Ok | Unguarded:
    """Reject definitions with a cycle of references not under a prefix.

    The returned path leads from the definition body to the offending name;
    when the cycle passes through other definitions their names appear as
    ``Rec:Y`` steps.
    """
    for name in defs:
        for ref, _ in _unguarded_refs(defs[name], []):
            if ref not in defs:
                raise UnboundName(ref)
        # depth-first search over unguarded references starting at ``name``
        stack: list[tuple[str, list[str]]] = [(name, [])]
        seen: set[str] = set()
        while stack:
            cur, path = stack.pop()
            for ref, sub in _unguarded_refs(defs[cur], []):
                full = path + sub
                if ref == name:
                    return Unguarded(name, full)
                if ref not in seen and ref in defs:
                    seen.add(ref)
                    stack.append((ref, full + [f"Rec:{ref}"]))
    return Ok()


def action_label(a: CcsAction) -> Program:
    if isinstance(a, Act):
        return Inst(a.name)
    if isinstance(a, CoAct):
        return Inst(a.name + "'")
    return EPSILON


class CcsSemantics:
    """CCS as an operational semantics: τ is the silent label."""

    sem_id = "ccs"

    def __init__(self, defs: CcsDefs) -> None:
        self.defs = defs

    def step(self, state: CcsProcess) -> list[tuple[Program, CcsProcess]]:
        return [(action_label(a), q) for a, q in ccs_step(state, self.defs)]

    def is_terminated(self, state: CcsProcess) -> bool:
        return is_inert(state)


def ccs_as_opsem(defs: CcsDefs) -> CcsSemantics:
    verdict = check_guarded(defs)
    if isinstance(verdict, Unguarded):
        raise RegistryError(f"unguarded definition {verdict.name}: {verdict.path}")
    return CcsSemantics(defs)


def names_in(p: CcsProcess) -> set[str]:
    if isinstance(p, Name):
        return {p.ident}
    if isinstance(p, (Par, Sum)):
        return names_in(p.left) | names_in(p.right)
    if isinstance(p, (Prefix, Restrict)):
        return names_in(p.body)
    return set()


CcsTerm = Union[Nil, Prefix, Par, Sum, Restrict, Name]
