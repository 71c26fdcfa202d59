"""Finite Kripke frames and the evaluation of formulas and programs over them."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import BudgetExceeded
from .opsem import OpSemRegistry
from .syntax import (
    EPS,
    And,
    Bot,
    Box,
    Choice,
    Dia,
    Foreign,
    Formula,
    Inst,
    Neg,
    Or,
    Pos,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Test,
    Top,
    atoms_of,
    labels_of,
)

WorldSet = np.ndarray  # bool[n]
AccRel = np.ndarray  # bool[n, n]


@dataclass
class KripkeFrame:
    """Worlds ``0..n-1`` with atom valuations and per-label accessibility relations."""

    n: int
    atom_val: dict[str, WorldSet] = field(default_factory=dict)
    label_rel: dict[str, AccRel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("a frame needs at least one world")
        for k, v in self.atom_val.items():
            self.atom_val[k] = np.asarray(v, dtype=bool).reshape(self.n)
        for k, r in self.label_rel.items():
            self.label_rel[k] = np.asarray(r, dtype=bool).reshape(self.n, self.n)

    def atom(self, name: str) -> WorldSet:
        got = self.atom_val.get(name)
        return got if got is not None else np.zeros(self.n, dtype=bool)

    def rel(self, name: str) -> AccRel:
        if name == EPS:
            return np.eye(self.n, dtype=bool)
        got = self.label_rel.get(name)
        return got if got is not None else np.zeros((self.n, self.n), dtype=bool)

    def to_json(self) -> str:
        return json.dumps({
            "worlds": self.n,
            "atoms": {k: [int(i) for i in np.flatnonzero(v)] for k, v in sorted(self.atom_val.items())},
            "labels": {k: [[int(i), int(j)] for i, j in zip(*np.nonzero(r))]
                       for k, r in sorted(self.label_rel.items())},
        })

    @classmethod
    def from_json(cls, text: str) -> "KripkeFrame":
        data = json.loads(text)
        n = int(data["worlds"])
        atoms = {}
        for k, ws in data.get("atoms", {}).items():
            v = np.zeros(n, dtype=bool)
            v[list(ws)] = True
            atoms[k] = v
        labels = {}
        for k, es in data.get("labels", {}).items():
            r = np.zeros((n, n), dtype=bool)
            for i, j in es:
                r[i, j] = True
            labels[k] = r
        return cls(n, atoms, labels)


def compose(a: AccRel, b: AccRel) -> AccRel:
    return (a.astype(np.uint8) @ b.astype(np.uint8)) > 0


def rt_closure(r: AccRel) -> AccRel:
    out = np.eye(r.shape[0], dtype=bool) | r
    while True:
        nxt = out | compose(out, out)
        if np.array_equal(nxt, out):
            return out
        out = nxt


class Evaluator:
    """Memoised evaluation on one frame; foreign programs are solved as a least fixpoint."""

    def __init__(self, frame: KripkeFrame, reg: OpSemRegistry | None = None,
                 state_budget: int = 10_000) -> None:
        self.frame = frame
        self.reg = reg if reg is not None else OpSemRegistry()
        self.budget = state_budget
        self._f: dict[Formula, WorldSet] = {}
        self._p: dict[Program, AccRel] = {}

    def formula(self, f: Formula) -> WorldSet:
        got = self._f.get(f)
        if got is None:
            got = self._formula(f)
            self._f[f] = got
        return got

    def _formula(self, f: Formula) -> WorldSet:
        n = self.frame.n
        if isinstance(f, Top):
            return np.ones(n, dtype=bool)
        if isinstance(f, Bot):
            return np.zeros(n, dtype=bool)
        if isinstance(f, Pos):
            return self.frame.atom(f.name).copy()
        if isinstance(f, Neg):
            return ~self.frame.atom(f.name)
        if isinstance(f, Or):
            return self.formula(f.left) | self.formula(f.right)
        if isinstance(f, And):
            return self.formula(f.left) & self.formula(f.right)
        if isinstance(f, Box):
            r, s = self.program(f.prog), self.formula(f.body)
            return ~(r & ~s[None, :]).any(axis=1)
        if isinstance(f, Dia):
            r, s = self.program(f.prog), self.formula(f.body)
            return (r & s[None, :]).any(axis=1)
        raise TypeError(f)

    def program(self, p: Program) -> AccRel:
        got = self._p.get(p)
        if got is None:
            got = self._program(p)
            self._p[p] = got
        return got

    def _program(self, p: Program) -> AccRel:
        n = self.frame.n
        if isinstance(p, Terminated):
            return np.eye(n, dtype=bool)
        if isinstance(p, Stuck):
            return np.zeros((n, n), dtype=bool)
        if isinstance(p, Inst):
            return self.frame.rel(p.name)
        if isinstance(p, Test):
            return np.diag(self.formula(p.formula))
        if isinstance(p, Seq):
            return compose(self.program(p.first), self.program(p.second))
        if isinstance(p, Choice):
            return self.program(p.left) | self.program(p.right)
        if isinstance(p, Star):
            return rt_closure(self.program(p.body))
        if isinstance(p, Foreign):
            self._solve_foreign(p)
            return self._p[p]
        raise TypeError(p)

    def _solve_foreign(self, start: Foreign) -> None:
        """Least solution of X_P = ∪ over P -β-> γ of ⟦β⟧ ∘ X_γ on the reachable programs."""
        index = {start: 0}
        order: list[Program] = [start]
        steps: list[list[tuple[Program, Program]]] = []
        queue = deque([start])
        while queue:
            p = queue.popleft()
            succ = self.reg.logic_steps(p)
            steps.append(succ)
            for _, g in succ:
                if isinstance(g, Foreign) and g not in index and g not in self._p:
                    if len(order) >= self.budget:
                        raise BudgetExceeded("foreign program exploration", self.budget)
                    index[g] = len(order)
                    order.append(g)
                    queue.append(g)
        n = self.frame.n
        x = [np.zeros((n, n), dtype=bool) for _ in order]
        labels = [[(self.program(b), g) for b, g in succ] for succ in steps]

        def value(g: Program) -> AccRel:
            i = index.get(g)  # type: ignore[arg-type]
            return x[i] if i is not None else self.program(g)

        changed = True
        while changed:
            changed = False
            for i in range(len(order)):
                acc = x[i].copy()
                for rb, g in labels[i]:
                    acc |= compose(rb, value(g))
                if not np.array_equal(acc, x[i]):
                    x[i] = acc
                    changed = True
        for p, rel in zip(order, x):
            self._p[p] = rel


def eval_formula(frame: KripkeFrame, f: Formula, reg: OpSemRegistry | None = None,
                 state_budget: int = 10_000) -> WorldSet:
    return Evaluator(frame, reg, state_budget).formula(f)


def eval_program(frame: KripkeFrame, p: Program, reg: OpSemRegistry | None = None,
                 state_budget: int = 10_000) -> AccRel:
    return Evaluator(frame, reg, state_budget).program(p)


def eval_sequent(ev: Evaluator, gamma: Iterable[Formula]) -> WorldSet:
    """A sequent holds where one of its formulas holds."""
    out = np.zeros(ev.frame.n, dtype=bool)
    for f in gamma:
        out |= ev.formula(f)
    return out


def is_valid(frame: KripkeFrame, f: Formula, reg: OpSemRegistry | None = None,
             state_budget: int = 10_000) -> bool:
    return bool(eval_formula(frame, f, reg, state_budget).all())


def random_frame(seed: int, n_worlds: int, atoms: Iterable[str], labels: Iterable[str],
                 density: float = 0.5) -> KripkeFrame:
    """Each valuation entry and each edge is present independently with probability ``density``."""
    if n_worlds < 1 or not 0.0 <= density <= 1.0:
        raise ValueError("need n_worlds >= 1 and 0 <= density <= 1")
    rng = np.random.default_rng(seed)
    atom_val = {a: rng.random(n_worlds) < density for a in sorted(set(atoms))}
    label_rel = {l: rng.random((n_worlds, n_worlds)) < density
                 for l in sorted(set(labels) - {EPS})}
    return KripkeFrame(n_worlds, atom_val, label_rel)


@dataclass(frozen=True)
class NotFound:
    pass


def _vocabulary(f: Formula, reg: OpSemRegistry | None) -> tuple[list[str], list[str]]:
    atoms, labels = atoms_of(f), labels_of(f)
    if reg is not None:
        # labels and test atoms of foreign programs appear only after unfolding
        from .syntax import fl_closure

        try:
            for g in fl_closure([f], reg, max_size=5_000):
                atoms |= atoms_of(g)
                labels |= labels_of(g)
        except BudgetExceeded:
            pass
    return sorted(atoms), sorted(labels - {EPS})


def find_countermodel(f: Formula, reg: OpSemRegistry | None = None, max_worlds: int = 3,
                      samples: int = 200, seed: int = 0,
                      state_budget: int = 10_000) -> tuple[KripkeFrame, int] | NotFound:
    """Search small frames for a world where ``f`` fails.

    One-world frames are enumerated exhaustively when the vocabulary is
    small; larger frames are sampled at several densities.
    """
    atoms, labels = _vocabulary(f, reg)
    k = len(atoms) + len(labels)
    if k <= 12:
        for bits in itertools.product([False, True], repeat=k):
            av = {a: np.array([b]) for a, b in zip(atoms, bits)}
            lr = {l: np.array([[b]]) for l, b in zip(labels, bits[len(atoms):])}
            frame = KripkeFrame(1, av, lr)
            got = eval_formula(frame, f, reg, state_budget)
            if not got[0]:
                return frame, 0
    rng = np.random.default_rng(seed)
    for n in range(1, max_worlds + 1):
        for _ in range(samples):
            density = float(rng.choice([0.2, 0.5, 0.8]))
            frame = random_frame(int(rng.integers(2**31)), n, atoms, labels, density)
            got = eval_formula(frame, f, reg, state_budget)
            bad = np.flatnonzero(~got)
            if bad.size:
                return frame, int(bad[0])
    return NotFound()
