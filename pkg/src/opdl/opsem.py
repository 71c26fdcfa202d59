"""Pluggable operational semantics, LTS exploration and the trace oracle.

A semantics maps a state to a finite list of ``(label, successor)`` pairs.
Labels are programs: ``Inst(a)`` for an instruction, ``Test(phi)`` for a
test and ``EPSILON`` for the silent step.  The trace oracle ε-erases,
determinises on the fly and runs a Hopcroft-Karp style congruence search.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Literal, Protocol, Sequence

from .errors import BudgetExceeded, RegistryError
from .syntax import (
    EPSILON,
    Choice,
    Foreign,
    Inst,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Test,
)

Label = Program
Trace = tuple[Program, ...]
TraceMode = Literal["prefix", "complete"]
SUBSET_CAP = 1 << 16


class OpSemContract(Protocol):
    sem_id: str

    def step(self, state: Any) -> list[tuple[Label, Any]]: ...

    def is_terminated(self, state: Any) -> bool: ...


# ---------------------------------------------------------------- registry


class OpSemRegistry:
    """Semantics by id; the regular-program semantics ``kleene`` is built in."""

    def __init__(self, contracts: Iterable[OpSemContract] = ()) -> None:
        self._contracts: dict[str, OpSemContract] = {}
        self.register(KleeneSemantics(self))
        for c in contracts:
            self.register(c)

    def register(self, contract: OpSemContract) -> None:
        if contract.sem_id in self._contracts and contract.sem_id == "kleene":
            raise RegistryError("the kleene semantics cannot be replaced")
        self._contracts[contract.sem_id] = contract

    def __getitem__(self, sem_id: str) -> OpSemContract:
        try:
            return self._contracts[sem_id]
        except KeyError:
            raise RegistryError(f"unknown semantics {sem_id!r}") from None

    def __contains__(self, sem_id: str) -> bool:
        return sem_id in self._contracts

    @property
    def kleene(self) -> "KleeneSemantics":
        return self._contracts["kleene"]  # type: ignore[return-value]

    def wrap(self, sem_id: str, state: Any) -> Program:
        """Embed a foreign state as a program; terminated states become skip."""
        if self[sem_id].is_terminated(state):
            return EPSILON
        return Foreign(sem_id, state)

    def logic_steps(self, prog: Program) -> list[tuple[Program, Program]]:
        """The transitions of ``prog`` as (label program, successor program)."""
        if isinstance(prog, Foreign):
            contract = self[prog.sem]
            try:
                raw = contract.step(prog.term)
            except RegistryError:
                raise
            except LookupError as exc:
                raise RegistryError(str(exc)) from exc
            pairs = {(lab, self.wrap(prog.sem, s)) for lab, s in raw}
        else:
            pairs = set(kleene_step(prog, self))
        return sorted(pairs, key=lambda bg: (str(bg[0]), str(bg[1])))

    def semantics_for(self, prog: Program) -> tuple[OpSemContract, Any]:
        """Contract and raw state used to explore ``prog``."""
        if isinstance(prog, Foreign):
            return self[prog.sem], prog.term
        return self.kleene, prog


def seq_cont(alpha: Program, beta: Program) -> Program:
    return beta if isinstance(alpha, Terminated) else Seq(alpha, beta)


def kleene_step(p: Program, reg: OpSemRegistry | None = None) -> list[tuple[Label, Program]]:
    """Operational steps of a regular program.

    Bare instructions and tests fire to ``skip``; a sequence steps its first
    component, continuing with the second one.
    """
    if isinstance(p, (Terminated, Stuck)):
        return []
    if isinstance(p, (Inst, Test)):
        return [(p, EPSILON)]
    if isinstance(p, Choice):
        return [(EPSILON, p.left), (EPSILON, p.right)]
    if isinstance(p, Star):
        return [(EPSILON, EPSILON), (EPSILON, Seq(p.body, p))]
    if isinstance(p, Seq):
        if isinstance(p.first, Terminated):
            return [(EPSILON, p.second)]
        return [(lab, seq_cont(rest, p.second)) for lab, rest in kleene_step(p.first, reg)]
    if isinstance(p, Foreign):
        if reg is None:
            raise RegistryError("foreign program stepped without a registry")
        return reg.logic_steps(p)
    raise TypeError(p)


class KleeneSemantics:
    sem_id = "kleene"

    def __init__(self, reg: OpSemRegistry) -> None:
        self._reg = reg

    def step(self, state: Program) -> list[tuple[Label, Program]]:
        return kleene_step(state, self._reg)

    def is_terminated(self, state: Program) -> bool:
        return isinstance(state, Terminated)


def default_registry(ccs_defs: Any = None, chor_defs: Any = None) -> OpSemRegistry:
    """Registry with the CCS and choreography semantics over the given definitions."""
    from .ccs import CcsDefs, ccs_as_opsem
    from .chor import ChorDefs, chor_as_opsem

    return OpSemRegistry(
        [
            ccs_as_opsem(ccs_defs if ccs_defs is not None else CcsDefs()),
            chor_as_opsem(chor_defs if chor_defs is not None else ChorDefs()),
        ]
    )


# ---------------------------------------------------------------- exploration


@dataclass
class Lts:
    states: list[Any]
    edges: list[tuple[int, Label, int]]
    initial: int
    truncated: bool
    terminal: set[int] = field(default_factory=set)

    def successors(self, i: int) -> list[tuple[Label, int]]:
        out = self.__dict__.get("_succ")
        if out is None:
            out = [[] for _ in self.states]
            for s, lab, t in self.edges:
                out[s].append((lab, t))
            self.__dict__["_succ"] = out
        return out[i]


def explore(start: Any, sem: OpSemContract, max_states: int = 10_000) -> Lts:
    """Breadth-first reachable transition graph from ``start``."""
    if max_states < 1:
        raise ValueError("max_states must be positive")
    index: dict[Hashable, int] = {start: 0}
    states = [start]
    edges: list[tuple[int, Label, int]] = []
    truncated = False
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for lab, nxt in sorted(sem.step(states[i]), key=lambda ls: (str(ls[0]), str(ls[1]))):
            j = index.get(nxt)
            if j is None:
                if len(states) >= max_states:
                    truncated = True
                    continue
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                queue.append(j)
            edges.append((i, lab, j))
    terminal = {i for i, s in enumerate(states) if sem.is_terminated(s)}
    return Lts(states, edges, 0, truncated, terminal)


def lts_to_dot(lts: Lts, render_state: Any = str) -> str:
    lines = ["digraph lts {", "  rankdir=LR;"]
    for i, s in enumerate(lts.states):
        shape = "doublecircle" if i in lts.terminal else "circle"
        text = render_state(s).replace('"', '\\"')
        lines.append(f'  s{i} [label="{text}", shape={shape}];')
    for s, lab, t in lts.edges:
        style = ", style=dashed" if isinstance(lab, Terminated) else ""
        text = str(lab).replace('"', '\\"')
        lines.append(f'  s{s} -> s{t} [label="{text}"{style}];')
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------- traces


def trace_str(t: Sequence[Program]) -> str:
    """A trace rendered as a sequential program; the empty trace is ``skip``."""
    if not t:
        return "skip"
    return ";".join(_label_atom(lab) for lab in t)


def _label_atom(lab: Program) -> str:
    s = str(lab)
    return f"({s})" if isinstance(lab, (Choice, Seq)) else s


class _Nfa:
    """ε-NFA view over an explored LTS, with memoised ε-closures."""

    def __init__(self, lts: Lts, mode: TraceMode) -> None:
        self.lts = lts
        self.mode = mode
        self._closure: dict[frozenset[int], frozenset[int]] = {}
        self._post: dict[tuple[frozenset[int], Program], frozenset[int]] = {}

    def closure(self, states: Iterable[int]) -> frozenset[int]:
        key = frozenset(states)
        got = self._closure.get(key)
        if got is not None:
            return got
        seen = set(key)
        stack = list(key)
        while stack:
            s = stack.pop()
            for lab, t in self.lts.successors(s):
                if isinstance(lab, Terminated) and t not in seen:
                    seen.add(t)
                    stack.append(t)
        out = frozenset(seen)
        self._closure[key] = out
        return out

    def start(self) -> frozenset[int]:
        return self.closure([self.lts.initial])

    def post(self, subset: frozenset[int], lab: Program) -> frozenset[int]:
        key = (subset, lab)
        got = self._post.get(key)
        if got is None:
            got = self.closure(t for s in subset for l2, t in self.lts.successors(s) if l2 == lab)
            self._post[key] = got
        return got

    def accepting(self, subset: frozenset[int]) -> bool:
        if self.mode == "prefix":
            return bool(subset)
        return any(s in self.lts.terminal for s in subset)

    def alphabet(self) -> set[Program]:
        return {lab for _, lab, _ in self.lts.edges if not isinstance(lab, Terminated)}


def traces_upto(start: Any, sem: OpSemContract, n: int, mode: TraceMode = "prefix",
                max_states: int = 100_000) -> set[Trace]:
    """Traces of length at most ``n``.

    In ``prefix`` mode every ε-erased path label counts, so the result is
    prefix-closed and contains the empty trace.  In ``complete`` mode only
    paths ending in a terminated state count.
    """
    lts = explore(start, sem, max_states)
    if lts.truncated:
        raise BudgetExceeded("trace exploration", max_states)
    nfa = _Nfa(lts, mode)
    alphabet = sorted(nfa.alphabet(), key=str)
    out: set[Trace] = set()
    layer: list[tuple[Trace, frozenset[int]]] = [((), nfa.start())]
    for k in range(n + 1):
        nxt: list[tuple[Trace, frozenset[int]]] = []
        for t, subset in layer:
            if nfa.accepting(subset):
                out.add(t)
            if k == n:
                continue
            for lab in alphabet:
                succ = nfa.post(subset, lab)
                if succ:
                    nxt.append((t + (lab,), succ))
        layer = nxt
    return out


def accepts(start: Any, sem: OpSemContract, trace: Sequence[Program],
            mode: TraceMode = "complete", max_states: int = 100_000) -> bool:
    """Replay ``trace`` on the program and report membership."""
    lts = explore(start, sem, max_states)
    if lts.truncated:
        raise BudgetExceeded("trace replay", max_states)
    nfa = _Nfa(lts, mode)
    cur = nfa.start()
    for lab in trace:
        cur = nfa.post(cur, lab)
        if not cur:
            break
    return nfa.accepting(cur)


@dataclass(frozen=True)
class Equivalent:
    pass


@dataclass(frozen=True)
class Distinguished:
    trace: Trace
    side: Literal["left", "right"]  # the side whose language contains the trace

    def __str__(self) -> str:
        return trace_str(self.trace)


@dataclass(frozen=True)
class Inconclusive:
    reason: str


@dataclass(frozen=True)
class Included:
    pass


@dataclass(frozen=True)
class Counterexample:
    trace: Trace

    def __str__(self) -> str:
        return trace_str(self.trace)


TraceVerdict = Equivalent | Distinguished | Inconclusive


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Hashable, Hashable] = {}

    def find(self, x: Hashable) -> Hashable:
        root = x
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while self.parent.get(x, x) != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: Hashable, b: Hashable) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _nfas(p: Any, q: Any, sem_p: OpSemContract, sem_q: OpSemContract, max_states: int,
          mode: TraceMode) -> tuple[_Nfa, _Nfa] | Inconclusive:
    lp = explore(p, sem_p, max_states)
    lq = explore(q, sem_q, max_states)
    if lp.truncated or lq.truncated:
        return Inconclusive(f"exploration truncated at {max_states} states")
    return _Nfa(lp, mode), _Nfa(lq, mode)


def trace_equiv(p: Any, q: Any, sem_p: OpSemContract, sem_q: OpSemContract | None = None,
                max_states: int = 10_000, mode: TraceMode = "complete") -> TraceVerdict:
    """Decide trace-language equality by a breadth-first congruence search.

    Pairs of determinised subset-states are merged in a union-find; the first
    pair with different acceptance yields a shortest distinguishing trace.
    """
    got = _nfas(p, q, sem_p, sem_q or sem_p, max_states, mode)
    if isinstance(got, Inconclusive):
        return got
    np_, nq = got
    alphabet = sorted(np_.alphabet() | nq.alphabet(), key=str)
    uf = _UnionFind()
    start = (("L", np_.start()), ("R", nq.start()))
    uf.union(*start)
    queue: deque[tuple[frozenset[int], frozenset[int], Trace]] = deque(
        [(start[0][1], start[1][1], ())]
    )
    subsets = 2
    while queue:
        sp, sq, t = queue.popleft()
        ap, aq = np_.accepting(sp), nq.accepting(sq)
        if ap != aq:
            return _shortest_difference(np_, nq, alphabet)
        for lab in alphabet:
            tp, tq = np_.post(sp, lab), nq.post(sq, lab)
            if uf.union(("L", tp), ("R", tq)):
                subsets += 1
                if subsets > SUBSET_CAP:
                    return Inconclusive(f"determinisation exceeded {SUBSET_CAP} subsets")
                queue.append((tp, tq, t + (lab,)))
    return Equivalent()


def _shortest_difference(np_: _Nfa, nq: _Nfa, alphabet: list[Program]) -> TraceVerdict:
    """Plain product search; union-find pruning does not guarantee minimality."""
    start = (np_.start(), nq.start())
    seen = {start}
    queue: deque[tuple[frozenset[int], frozenset[int], Trace]] = deque([(start[0], start[1], ())])
    while queue:
        sp, sq, t = queue.popleft()
        ap, aq = np_.accepting(sp), nq.accepting(sq)
        if ap != aq:
            return Distinguished(t, "left" if ap else "right")
        for lab in alphabet:
            pair = (np_.post(sp, lab), nq.post(sq, lab))
            if pair not in seen:
                seen.add(pair)
                if len(seen) > SUBSET_CAP:
                    return Inconclusive(f"determinisation exceeded {SUBSET_CAP} subsets")
                queue.append((pair[0], pair[1], t + (lab,)))
    raise AssertionError("congruence search and product search disagree")


def trace_included(p: Any, q: Any, sem_p: OpSemContract, sem_q: OpSemContract | None = None,
                   max_states: int = 10_000,
                   mode: TraceMode = "complete") -> Included | Counterexample | Inconclusive:
    """Check Tr(p) ⊇ Tr(q); a counterexample is a shortest trace of q missing from p."""
    got = _nfas(p, q, sem_p, sem_q or sem_p, max_states, mode)
    if isinstance(got, Inconclusive):
        return got
    np_, nq = got
    alphabet = sorted(nq.alphabet(), key=str)
    start = (np_.start(), nq.start())
    seen = {start}
    queue: deque[tuple[frozenset[int], frozenset[int], Trace]] = deque([(start[0], start[1], ())])
    while queue:
        sp, sq, t = queue.popleft()
        if nq.accepting(sq) and not np_.accepting(sp):
            return Counterexample(t)
        for lab in alphabet:
            tq = nq.post(sq, lab)
            if not tq:
                continue
            pair = (np_.post(sp, lab), tq)
            if pair not in seen:
                seen.add(pair)
                if len(seen) > SUBSET_CAP:
                    return Inconclusive(f"determinisation exceeded {SUBSET_CAP} subsets")
                queue.append((pair[0], pair[1], t + (lab,)))
    return Included()
