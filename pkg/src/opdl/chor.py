"""Symbolic choreographies with out-of-order execution."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import RegistryError, UnboundName
from .syntax import Inst, Neg, Pos, Program, Test
from .terms import Term

_PLAIN = re.compile(r"[A-Za-z0-9_]+\Z")


def _expr(e: str) -> str:
    return e if _PLAIN.match(e) else '"' + e.replace('"', '\\"') + '"'


# ---------------------------------------------------------------- instructions


class ChorInstr(Term):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Assign(ChorInstr):
    pid: str
    var: str
    expr: str

    def _render(self) -> str:
        return f"{self.pid}.{self.var} := {_expr(self.expr)}"


@dataclass(frozen=True, eq=False, repr=False)
class Com(ChorInstr):
    src: str
    expr: str
    dst: str
    var: str

    def _render(self) -> str:
        return f"{self.src}.{_expr(self.expr)} -> {self.dst}.{self.var}"


@dataclass(frozen=True, eq=False, repr=False)
class Sel(ChorInstr):
    src: str
    dst: str
    label: str

    def _render(self) -> str:
        return f"{self.src} -> {self.dst}[{self.label}]"


@dataclass(frozen=True, eq=False, repr=False)
class Cont(ChorInstr):
    name: str
    pid: str

    def _render(self) -> str:
        return f"{self.name}#{self.pid}"


@dataclass(frozen=True, eq=False, repr=False)
class TestPos(ChorInstr):
    pid: str
    cond: str

    def _render(self) -> str:
        return f"?{self.pid}.{self.cond}"


@dataclass(frozen=True, eq=False, repr=False)
class TestNeg(ChorInstr):
    pid: str
    cond: str

    def _render(self) -> str:
        return f"?~{self.pid}.{self.cond}"


# ---------------------------------------------------------------- choreographies


class Choreography(Term):
    pass


@dataclass(frozen=True, eq=False, repr=False)
class Nil(Choreography):
    def _render(self) -> str:
        return "0"


@dataclass(frozen=True, eq=False, repr=False)
class SeqI(Choreography):
    instr: ChorInstr
    cont: Choreography

    def _render(self) -> str:
        return f"{self.instr}; {self.cont}"


@dataclass(frozen=True, eq=False, repr=False)
class Cond(Choreography):
    """``if pid.cond { then } else { else_ }; cont``."""

    pid: str
    cond: str
    then: Choreography
    else_: Choreography
    cont: Choreography

    def _render(self) -> str:
        return f"if {self.pid}.{self.cond} {{ {self.then} }} else {{ {self.else_} }}; {self.cont}"


@dataclass(frozen=True, eq=False, repr=False)
class Call(Choreography):
    name: str

    def _render(self) -> str:
        return self.name


NIL = Nil()


class ChorDefs(dict):
    """Choreography definitions ``X := C``."""

    def render(self) -> str:
        return "\n".join(f"{k} := {v}" for k, v in self.items())


class ChorError(RegistryError):
    pass


def chor_seq(c: Choreography, k: Choreography) -> Choreography:
    """Append the continuation ``k`` at the end of ``c``."""
    if isinstance(c, Nil):
        return k
    if isinstance(k, Nil):
        return c
    if isinstance(c, SeqI):
        return SeqI(c.instr, chor_seq(c.cont, k))
    if isinstance(c, Cond):
        return Cond(c.pid, c.cond, c.then, c.else_, chor_seq(c.cont, k))
    if isinstance(c, Call):
        raise ChorError(f"cannot sequence after the call {c.name}")
    raise TypeError(c)


def pn(x: ChorInstr | Choreography, defs: ChorDefs | None = None,
       _visiting: frozenset[str] = frozenset()) -> frozenset[str]:
    """Process names involved in an instruction or choreography."""
    if isinstance(x, (Com, Sel)):
        return frozenset({x.src, x.dst})
    if isinstance(x, (Assign, Cont, TestPos, TestNeg)):
        return frozenset({x.pid})
    if isinstance(x, Nil):
        return frozenset()
    if isinstance(x, SeqI):
        return pn(x.instr) | pn(x.cont, defs, _visiting)
    if isinstance(x, Cond):
        return (frozenset({x.pid}) | pn(x.then, defs, _visiting)
                | pn(x.else_, defs, _visiting) | pn(x.cont, defs, _visiting))
    if isinstance(x, Call):
        if defs is None or x.name not in defs:
            raise UnboundName(x.name)
        if x.name in _visiting:
            return frozenset()
        return pn(defs[x.name], defs, _visiting | {x.name})
    raise TypeError(x)


def chor_step(c: Choreography, defs: ChorDefs) -> set[tuple[ChorInstr, Choreography]]:
    """Transitions by the atomic, conditional, call, sequence and delay rules."""
    if isinstance(c, Nil):
        return set()
    if isinstance(c, SeqI):
        out = {(c.instr, c.cont)}
        own = pn(c.instr)
        for mu, rest in chor_step(c.cont, defs):
            if not (own & pn(mu)):
                out.add((mu, SeqI(c.instr, rest)))
        return out
    if isinstance(c, Cond):
        out = {
            (TestPos(c.pid, c.cond), chor_seq(c.then, c.cont)),
            (TestNeg(c.pid, c.cond), chor_seq(c.else_, c.cont)),
        }
        left = chor_step(c.then, defs)
        right = chor_step(c.else_, defs)
        for mu, t2 in left:
            if c.pid in pn(mu):
                continue
            for nu, e2 in right:
                if nu == mu:
                    out.add((mu, Cond(c.pid, c.cond, t2, e2, c.cont)))
        return out
    if isinstance(c, Call):
        if c.name not in defs:
            raise UnboundName(c.name)
        body = defs[c.name]
        names = sorted(pn(c, defs))
        out = set()
        for q in names:
            target = body
            for p in reversed([p for p in names if p != q]):
                target = SeqI(Cont(c.name, p), target)
            out.add((Cont(c.name, q), target))
        return out
    raise TypeError(c)


def instr_label(i: ChorInstr) -> Program:
    """Tests become logic tests on the atom ``pid.cond``; other instructions are labels."""
    if isinstance(i, TestPos):
        return Test(Pos(f"{i.pid}.{i.cond}"))
    if isinstance(i, TestNeg):
        return Test(Neg(f"{i.pid}.{i.cond}"))
    return Inst(str(i))


def validate_chor(c: Choreography, defs: ChorDefs) -> None:
    """Names resolve and no continuation follows a call inside a conditional."""
    if isinstance(c, SeqI):
        validate_chor(c.cont, defs)
    elif isinstance(c, Cond):
        for branch in (c.then, c.else_, c.cont):
            validate_chor(branch, defs)
        if not isinstance(c.cont, Nil):
            for branch in (c.then, c.else_):
                if _ends_in_call(branch):
                    raise ChorError("a conditional with a continuation cannot end a branch in a call")
    elif isinstance(c, Call):
        if c.name not in defs:
            raise UnboundName(c.name)


def _ends_in_call(c: Choreography) -> bool:
    while True:
        if isinstance(c, Call):
            return True
        if isinstance(c, SeqI):
            c = c.cont
        elif isinstance(c, Cond):
            if not isinstance(c.cont, Nil):
                c = c.cont
            else:
                return _ends_in_call(c.then) or _ends_in_call(c.else_)
        else:
            return False


def validate_defs(defs: ChorDefs) -> None:
    for name, body in defs.items():
        validate_chor(body, defs)
        if not pn(Call(name), defs):
            raise ChorError(f"definition {name} involves no process")


class ChorSemantics:
    sem_id = "chor"

    def __init__(self, defs: ChorDefs) -> None:
        self.defs = defs

    def step(self, state: Choreography) -> list[tuple[Program, Choreography]]:
        return [(instr_label(i), c) for i, c in chor_step(state, self.defs)]

    def is_terminated(self, state: Choreography) -> bool:
        return isinstance(state, Nil)


def chor_as_opsem(defs: ChorDefs) -> ChorSemantics:
    validate_defs(defs)
    return ChorSemantics(defs)
