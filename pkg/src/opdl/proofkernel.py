"""Proof kernel: rule checking, immediate ancestors and the progress condition.

Progress is decided with a size-change style closure.  For every loop
target we collect the thread graphs of all finite paths that leave it and
come back; an infinite branch without progressing thread exists iff some
idempotent graph has no flagged self-loop reachable from the root.  A
failure yields a lasso which is then re-checked by enumerating threads on
the concrete path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .derivation import Derivation, PTree, open_leaf
from .errors import BudgetExceeded
from .opsem import OpSemRegistry
from .syntax import (
    EMPTY,
    And,
    Box,
    Choice,
    Dia,
    Foreign,
    Formula,
    Inst,
    Or,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Test,
    Top,
    negate,
    sort_formulas,
)

GRAPH_CAP = 1_000_000


@dataclass(frozen=True)
class KernelOptions:
    atomic_k: bool = False
    allow_open: bool = False


@dataclass(frozen=True)
class Ok:
    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class RuleViolation:
    node: str
    code: str
    reason: str

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"node {self.node}: {self.code}: {self.reason}"


# ---------------------------------------------------------------- rule schemas


def _fits(concl: frozenset[Formula], prin: Formula, actives: Iterable[Formula],
          premise: frozenset[Formula]) -> bool:
    """Premise is the context plus actives; keeping the principal is tolerated."""
    acts = frozenset(actives)
    return premise == (concl - {prin}) | acts or premise == concl | acts


def _star_unfoldings(f: Box | Dia) -> list[Formula]:
    """Accepted active forms for the iteration step: [a][a*]φ and [a;a*]φ."""
    star = f.prog
    assert isinstance(star, Star)
    mk = Box if isinstance(f, Box) else Dia
    return [mk(star.body, mk(star, f.body)), mk(Seq(star.body, star), f.body)]


def premise_actives(rule: str, prin: Formula, reg: OpSemRegistry) -> list[list[Formula]] | None:
    """Active formulas per premise for a unary-schema rule applied to ``prin``.

    Returns None when the principal has the wrong shape.  Rules that accept
    several forms (the iteration rules) are handled separately.
    """
    if rule == "or" and isinstance(prin, Or):
        return [[prin.left, prin.right]]
    if rule == "and" and isinstance(prin, And):
        return [[prin.left], [prin.right]]
    if isinstance(prin, Box):
        p, body = prin.prog, prin.body
        if rule == "box_eps" and isinstance(p, Terminated):
            return [[body]]
        if rule == "box_test" and isinstance(p, Test):
            return [[Or(negate(p.formula), body)]]
        if rule == "box_choice" and isinstance(p, Choice):
            return [[Box(p.left, body)], [Box(p.right, body)]]
        if rule == "box_seq" and isinstance(p, Seq):
            return [[Box(p.first, Box(p.second, body))]]
        if rule == "box_O" and not isinstance(p, Terminated):
            return [[Box(b, Box(g, body))] for b, g in reg.logic_steps(p)]
    if isinstance(prin, Dia):
        p, body = prin.prog, prin.body
        if rule == "dia_eps" and isinstance(p, Terminated):
            return [[body]]
        if rule == "dia_empty" and isinstance(p, Stuck):
            return [[]]
        if rule == "dia_test" and isinstance(p, Test):
            return [[And(p.formula, body)]]
        if rule == "dia_choice" and isinstance(p, Choice):
            return [[Dia(p.left, body), Dia(p.right, body)]]
        if rule == "dia_seq" and isinstance(p, Seq):
            return [[Dia(p.first, Dia(p.second, body))]]
        if rule == "dia_O" and not isinstance(p, Terminated):
            return [[Dia(b, Dia(g, body)) for b, g in reg.logic_steps(p)]]
    return None


def _principal_candidates(concl: frozenset[Formula], given: Formula | None) -> list[Formula]:
    if given is not None:
        return [given] if given in concl else []
    return sort_formulas(concl)


class _Checker:
    def __init__(self, d: Derivation, reg: OpSemRegistry, opts: KernelOptions) -> None:
        self.d = d
        self.reg = reg
        self.opts = opts

    def run(self) -> Ok | RuleViolation:
        for nid in self.d.walk():
            bad = self.node(nid)
            if bad is not None:
                return bad
        return Ok()

    def node(self, nid: str) -> RuleViolation | None:
        d = self.d
        node = d.nodes[nid]
        app = node.app
        concl = node.seq
        prem = [d.nodes[p].seq for p in app.premises]
        rule = app.rule

        def bad(code: str, reason: str) -> RuleViolation:
            return RuleViolation(nid, code, reason)

        if rule == "loop":
            tgt = d.nodes[app.target].seq  # type: ignore[index]
            return None if tgt == concl else bad("loop", "back-edge target has a different sequent")
        if rule == "open":
            return None if self.opts.allow_open else bad("open", "open premise in a closed derivation")
        if rule == "top":
            if prem:
                return bad("arity", "top has no premises")
            return None if concl == {Top()} else bad("top", "conclusion must be exactly true")
        if rule == "ax":
            if prem:
                return bad("arity", "ax has no premises")
            fs = list(concl)
            if len(fs) == 2 and negate(fs[0]) == fs[1]:
                return None
            return bad("ax", "conclusion must be exactly a formula and its negation")
        if rule == "box_empty":
            if prem:
                return bad("arity", "box_empty has no premises")
            fs = list(concl)
            if len(fs) == 1 and isinstance(fs[0], Box) and isinstance(fs[0].prog, Stuck):
                return None
            return bad("box_empty", "conclusion must be exactly [abort]φ")
        if rule == "w":
            if app.principal is None or app.principal not in concl:
                return bad("w", "weakened formula must occur in the conclusion")
            if len(prem) != 1 or prem[0] != concl - {app.principal}:
                return bad("w", "premise must be the conclusion without the weakened formula")
            return None
        if rule == "cut":
            chi = app.cut_formula
            if chi is None:
                return bad("cut", "missing cut formula")
            if len(prem) != 2:
                return bad("arity", "cut has two premises")
            if prem[0] != concl | {chi} or prem[1] != concl | {negate(chi)}:
                return bad("cut", "premises must extend the conclusion by the cut formula and its negation")
            return None
        if rule == "k":
            return self.k_rule(nid, concl, prem)
        if rule in ("box_star", "dia_star"):
            return self.star_rule(nid, concl, prem)
        for cand in _principal_candidates(concl, app.principal):
            acts = premise_actives(rule, cand, self.reg)
            if acts is None:
                continue
            if rule == "box_O":
                if self.match_all(concl, cand, acts, prem):
                    return None
                continue
            if len(acts) != len(prem):
                continue
            if all(_fits(concl, cand, a, p) for a, p in zip(acts, prem)):
                if rule == "dia_empty" and not prem[0]:
                    return bad("dia_empty", "premise must be nonempty")
                if rule == "dia_O" and not acts[0] and not prem[0]:
                    return bad("dia_O", "with no transitions the context must be nonempty")
                return None
        if rule == "box_O":
            return bad("box_O", "premises do not enumerate the transitions of the principal program")
        if rule == "dia_O":
            return bad("dia_O", "premise does not collect the transitions of the principal program")
        return bad(rule, "premises do not match the rule schema")

    def match_all(self, concl: frozenset[Formula], prin: Formula, acts: list[list[Formula]],
                  prem: list[frozenset[Formula]]) -> bool:
        if len(acts) != len(prem):
            return False
        unused = list(range(len(acts)))
        for p in prem:
            hit = next((i for i in unused if _fits(concl, prin, acts[i], p)), None)
            if hit is None:
                return False
            unused.remove(hit)
        return True

    def star_rule(self, nid: str, concl: frozenset[Formula], prem: list[frozenset[Formula]]) -> RuleViolation | None:
        rule = self.d.nodes[nid].app.rule
        want = Box if rule == "box_star" else Dia
        for cand in _principal_candidates(concl, self.d.nodes[nid].app.principal):
            if not (isinstance(cand, want) and isinstance(cand.prog, Star)):
                continue
            for unf in _star_unfoldings(cand):
                acts = [[cand.body], [unf]] if rule == "box_star" else [[cand.body, unf]]
                if len(acts) == len(prem) and all(_fits(concl, cand, a, p) for a, p in zip(acts, prem)):
                    return None
        return RuleViolation(nid, rule, "premises do not match the iteration rule")

    def k_rule(self, nid: str, concl: frozenset[Formula], prem: list[frozenset[Formula]]) -> RuleViolation | None:
        app = self.d.nodes[nid].app
        alpha = app.k_label
        if alpha is None:
            return RuleViolation(nid, "k", "missing label")
        if isinstance(alpha, Stuck):
            return RuleViolation(nid, "k-side", "side condition α ≠ ∅ violated")
        if self.opts.atomic_k and not isinstance(alpha, (Inst, Foreign)):
            return RuleViolation(nid, "k-atomic", "label must be atomic in atomic-K mode")
        if len(prem) != 1:
            return RuleViolation(nid, "arity", "k has one premise")
        boxes = [f for f in concl if isinstance(f, Box) and f.prog == alpha]
        if app.principal is not None:
            boxes = [app.principal] if app.principal in boxes else []
        for box in boxes:
            rest = concl - {box}
            if not all(isinstance(f, Dia) and f.prog == alpha for f in rest):
                continue
            expected = frozenset(f.body for f in rest) | {box.body}  # type: ignore[attr-defined]
            if prem[0] == expected:
                return None
        return RuleViolation(nid, "k", "conclusion must be ⟨α⟩Γ,[α]φ with premise Γ,φ")


def check_local(d: Derivation, reg: OpSemRegistry | None = None,
                opts: KernelOptions = KernelOptions()) -> Ok | RuleViolation:
    return _Checker(d, reg if reg is not None else OpSemRegistry(), opts).run()


# ---------------------------------------------------------------- ancestry


def k_principal(seq: frozenset[Formula], app_principal: Formula | None, alpha: Program,
                premise: frozenset[Formula]) -> Formula | None:
    if app_principal is not None:
        return app_principal
    for f in sort_formulas(seq):
        if isinstance(f, Box) and f.prog == alpha:
            rest = seq - {f}
            if frozenset(g.body for g in rest if isinstance(g, Dia)) | {f.body} == premise:  # type: ignore[attr-defined]
                return f
    return None


def _resolve_principal(d: Derivation, nid: str, reg: OpSemRegistry) -> Formula | None:
    """The principal formula of a unary-schema rule, inferred when not annotated."""
    node = d.nodes[nid]
    app = node.app
    if app.principal is not None or app.rule in ("w", "cut", "ax", "top", "box_empty", "loop", "open"):
        return app.principal
    prem = [d.nodes[p].seq for p in app.premises]
    if app.rule == "k":
        return k_principal(node.seq, None, app.k_label, prem[0]) if prem else None  # type: ignore[arg-type]
    for cand in sort_formulas(node.seq):
        if app.rule in ("box_star", "dia_star"):
            want = Box if app.rule == "box_star" else Dia
            if isinstance(cand, want) and isinstance(cand.prog, Star):
                for unf in _star_unfoldings(cand):
                    acts = [[cand.body], [unf]] if app.rule == "box_star" else [[cand.body, unf]]
                    if len(acts) == len(prem) and all(_fits(node.seq, cand, a, p) for a, p in zip(acts, prem)):
                        return cand
            continue
        acts = premise_actives(app.rule, cand, reg)
        if acts is None or len(acts) != len(prem):
            continue
        if app.rule == "box_O":
            if _Checker(d, reg, KernelOptions()).match_all(node.seq, cand, acts, prem):
                return cand
        elif all(_fits(node.seq, cand, a, p) for a, p in zip(acts, prem)):
            return cand
    return None


class Ancestry:
    """Immediate-ancestor relation of a derivation, one premise at a time."""

    def __init__(self, d: Derivation, reg: OpSemRegistry | None = None) -> None:
        self.d = d
        self.reg = reg if reg is not None else OpSemRegistry()
        self._cache: dict[tuple[str, int], dict[Formula, list[tuple[Formula, bool]]]] = {}

    def edges(self, nid: str, i: int) -> dict[Formula, list[tuple[Formula, bool]]]:
        """Map each formula at ``nid`` to its ancestors in premise ``i`` (with K-box flag).

        For a loop node, premise 0 is the back-edge target.
        """
        key = (nid, i)
        got = self._cache.get(key)
        if got is None:
            got = self._edges(nid, i)
            self._cache[key] = got
        return got

    def _edges(self, nid: str, i: int) -> dict[Formula, list[tuple[Formula, bool]]]:
        d = self.d
        node = d.nodes[nid]
        app = node.app
        seq = node.seq
        if app.rule == "loop":
            return {f: [(f, False)] for f in seq}
        child = d.nodes[app.premises[i]].seq
        out: dict[Formula, list[tuple[Formula, bool]]] = {f: [] for f in seq}
        if app.rule == "k":
            prin = k_principal(seq, app.principal, app.k_label, child)  # type: ignore[arg-type]
            for f in seq:
                if isinstance(f, (Box, Dia)) and f.body in child:
                    out[f].append((f.body, f == prin))
            return out
        prin = _resolve_principal(d, nid, self.reg)
        actives: list[Formula] = []
        if prin is not None and app.rule != "w":
            actives = self._actives(app.rule, prin, child)
        for f in seq:
            if f == prin:
                out[f] = [(a, False) for a in actives if a in child]
            elif f in child:
                out[f].append((f, False))
        return out

    def _actives(self, rule: str, prin: Formula, child: frozenset[Formula]) -> list[Formula]:
        if rule in ("box_star", "dia_star"):
            cands = [prin.body] + _star_unfoldings(prin)  # type: ignore[union-attr, operator]
            return [a for a in cands if a in child]
        acts = premise_actives(rule, prin, self.reg) or []
        return [a for group in acts for a in group if a in child]

    def immediate_ancestors(self, nid: str, occ: Formula) -> set[tuple[str, Formula]]:
        node = self.d.nodes[nid]
        if occ not in node.seq:
            raise ValueError(f"{occ} does not occur at node {nid}")
        out = set()
        for i, succ in enumerate(self.d.successor_ids(nid)):
            for g, _ in self.edges(nid, i)[occ]:
                out.add((succ, g))
        return out


def immediate_ancestors(d: Derivation, nid: str, occ: Formula,
                        reg: OpSemRegistry | None = None) -> set[tuple[str, Formula]]:
    return Ancestry(d, reg).immediate_ancestors(nid, occ)


def is_start(f: Formula) -> bool:
    """Formulas at which a progressing thread may start."""
    return isinstance(f, Box) and isinstance(f.prog, (Star, Foreign))


# ---------------------------------------------------------------- thread graphs

STAR = None  # the "thread not yet started" vertex is index 0 of every position


@dataclass(frozen=True)
class _Graph:
    src: str
    dst: str
    reach: np.ndarray
    flag: np.ndarray
    witness: tuple[str, ...]  # loop node ids of the segments composed

    def key(self) -> tuple[str, str, bytes, bytes]:
        return (self.src, self.dst, self.reach.tobytes(), self.flag.tobytes())


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.uint8) @ b.astype(np.uint8)) > 0


def _compose(g: _Graph, h: _Graph) -> _Graph:
    reach = _bmm(g.reach, h.reach)
    flag = _bmm(g.flag, h.reach) | _bmm(g.reach, h.flag)
    return _Graph(g.src, h.dst, reach, flag, g.witness + h.witness)


class _Positions:
    """Vertex numbering per node: 0 is the not-started vertex, then formulas in sorted order."""

    def __init__(self, d: Derivation) -> None:
        self.d = d
        self.formulas: dict[str, list[Formula]] = {}
        self.index: dict[str, dict[Formula, int]] = {}
        for nid, node in d.nodes.items():
            fs = sort_formulas(node.seq)
            self.formulas[nid] = fs
            self.index[nid] = {f: i + 1 for i, f in enumerate(fs)}

    def size(self, nid: str) -> int:
        return len(self.formulas[nid]) + 1


def _step_matrices(anc: Ancestry, pos: _Positions, nid: str, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Thread transitions from ``nid`` into its i-th successor, including thread starts."""
    d = anc.d
    succ = d.successor_ids(nid)[i]
    n, m = pos.size(nid), pos.size(succ)
    reach = np.zeros((n, m), dtype=bool)
    flag = np.zeros((n, m), dtype=bool)
    reach[0, 0] = True
    idx_n, idx_m = pos.index[nid], pos.index[succ]
    for f, targets in anc.edges(nid, i).items():
        a = idx_n[f]
        for g, k in targets:
            b = idx_m[g]
            reach[a, b] = True
            if k:
                flag[a, b] = True
    starts = [idx_n[f] for f in pos.formulas[nid] if is_start(f)]
    for a in starts:
        reach[0] |= reach[a]
        flag[0] |= flag[a]
    return reach, flag


def _tree_path(d: Derivation, top: str, bottom: str) -> list[str]:
    """Node ids from ``top`` down to its descendant ``bottom``."""
    path = [bottom]
    while path[-1] != top:
        path.append(d.parent[path[-1]])
    return path[::-1]


@dataclass
class Lasso:
    stem: list[str]  # node path from the root to the first visit of the cycle start
    cycle: list[str]  # node path from the cycle start back to it (last element jumps back)
    stem_loops: tuple[str, ...] = ()
    cycle_loops: tuple[str, ...] = ()
    verified: bool = False

    def targets(self, d: Derivation) -> list[str]:
        out = [d.root]
        for l in self.stem_loops + self.cycle_loops:
            out.append(d.nodes[l].app.target)  # type: ignore[arg-type]
        return out

    def describe(self, d: Derivation) -> str:
        return "→".join(self.targets(d))


@dataclass(frozen=True)
class Progressing:
    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class NotProgressing:
    lasso: Lasso

    def __bool__(self) -> bool:
        return False


class _Progress:
    def __init__(self, d: Derivation, reg: OpSemRegistry | None, cap: int) -> None:
        self.d = d
        self.anc = Ancestry(d, reg)
        self.pos = _Positions(d)
        self.cap = cap
        self.loops = d.loop_nodes()
        self.targets = sorted({d.nodes[l].app.target for l in self.loops})  # type: ignore[misc]

    def segment(self, top: str, loop: str) -> _Graph:
        """Thread graph of the path from ``top`` down to ``loop`` and across its back-edge."""
        d = self.d
        path = _tree_path(d, top, loop)
        n = self.pos.size(top)
        reach = np.eye(n, dtype=bool)
        flag = np.zeros((n, n), dtype=bool)
        for a, b in zip(path, path[1:]):
            i = d.premises(a).index(b)
            r, f = _step_matrices(self.anc, self.pos, a, i)
            reach, flag = _bmm(reach, r), _bmm(flag, r) | _bmm(reach, f)
        r, f = _step_matrices(self.anc, self.pos, loop, 0)
        reach, flag = _bmm(reach, r), _bmm(flag, r) | _bmm(reach, f)
        return _Graph(top, d.nodes[loop].app.target, reach, flag, (loop,))  # type: ignore[arg-type]

    def run(self) -> Progressing | NotProgressing:
        if not self.loops:
            return Progressing()
        d = self.d
        below = {t: [l for l in self.loops if t in d.ancestors(l)] for t in self.targets}
        base = {t: [self.segment(t, l) for l in below[t]] for t in self.targets}
        closure: dict[str, dict[tuple, _Graph]] = {t: {} for t in self.targets}
        work: list[_Graph] = []
        count = 0
        for t in self.targets:
            for g in base[t]:
                if g.key() not in closure[t]:
                    closure[t][g.key()] = g
                    work.append(g)
        while work:
            g = work.pop()
            for b in base[g.dst]:
                h = _compose(g, b)
                if h.key() not in closure[h.src]:
                    closure[h.src][h.key()] = h
                    work.append(h)
                    count += 1
                    if count > self.cap:
                        raise BudgetExceeded("progress closure", self.cap)
        stems = self.stems(closure)
        for u in self.targets:
            loops_u = [g for g in closure[u].values() if g.dst == u and self._idempotent(g)]
            for g in loops_u:
                good = np.flatnonzero(np.diag(g.flag))
                for h in stems.get(u, []):
                    start = _bmm(h.reach, g.reach)[0]
                    if not start[good].any():
                        lasso = self.lasso(h, g)
                        lasso.verified = verify_lasso(d, lasso, self.anc)
                        if not lasso.verified:
                            raise AssertionError("progress closure and lasso enumeration disagree")
                        return NotProgressing(lasso)
        return Progressing()

    def _idempotent(self, g: _Graph) -> bool:
        h = _compose(g, g)
        return np.array_equal(h.reach, g.reach) and np.array_equal(h.flag, g.flag)

    def stems(self, closure: dict[str, dict[tuple, _Graph]]) -> dict[str, list[_Graph]]:
        d = self.d
        out: dict[str, dict[tuple, _Graph]] = {t: {} for t in self.targets}
        root = d.root
        if root in out:
            n = self.pos.size(root)
            ident = _Graph(root, root, np.eye(n, dtype=bool), np.zeros((n, n), dtype=bool), ())
            out[root][ident.key()] = ident
        for l in self.loops:
            s = self.segment(root, l) if l != root else None
            if s is None:
                continue
            out[s.dst].setdefault(s.key(), s)
            for g in closure[s.dst].values():
                h = _compose(s, g)
                out[h.dst].setdefault(h.key(), h)
        return {t: list(v.values()) for t, v in out.items()}

    def lasso(self, stem: _Graph, cyc: _Graph) -> Lasso:
        d = self.d
        stem_nodes = self._expand(d.root, stem.witness)
        start = d.nodes[stem.witness[-1]].app.target if stem.witness else d.root
        cycle_nodes = self._expand(start, cyc.witness)  # type: ignore[arg-type]
        return Lasso(stem_nodes, cycle_nodes, stem.witness, cyc.witness)

    def _expand(self, top: str, loops: tuple[str, ...]) -> list[str]:
        path: list[str] = []
        cur = top
        for l in loops:
            path += _tree_path(self.d, cur, l)
            cur = self.d.nodes[l].app.target  # type: ignore[assignment]
        return path


def check_progress(d: Derivation, reg: OpSemRegistry | None = None,
                   cap: int = GRAPH_CAP) -> Progressing | NotProgressing:
    return _Progress(d, reg, cap).run()


def verify_lasso(d: Derivation, lasso: Lasso, anc: Ancestry | None = None) -> bool:
    """True iff no thread along the lasso's infinite branch progresses.

    Enumerates thread states (position, vertex) on the concrete stem and
    cycle, then looks for a reachable strongly connected component within
    the cycle that contains a K-box crossing.
    """
    anc = anc or Ancestry(d)
    pos = _Positions(d)
    path = lasso.stem + lasso.cycle
    k = len(lasso.stem)
    if not lasso.cycle:
        return False

    def succ_pos(i: int) -> int:
        return i + 1 if i + 1 < len(path) else k

    def step(i: int) -> tuple[np.ndarray, np.ndarray]:
        a = path[i]
        nxt = path[succ_pos(i)]
        succ_ids = d.successor_ids(a)
        j = succ_ids.index(nxt)
        return _step_matrices(anc, pos, a, j)

    mats = [step(i) for i in range(len(path))]
    states: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int, bool]] = []
    start = (0, 0)
    states[start] = 0
    stack = [start]
    while stack:
        i, v = stack.pop()
        r, f = mats[i]
        j = succ_pos(i)
        for w in np.flatnonzero(r[v]):
            s2 = (j, int(w))
            if s2 not in states:
                states[s2] = len(states)
                stack.append(s2)
            edges.append((states[(i, v)], states[s2], bool(f[v, w])))
    in_cycle = {sid for (i, _), sid in states.items() if i >= k}
    adj: dict[int, list[int]] = {s: [] for s in in_cycle}
    for a, b, _ in edges:
        if a in in_cycle and b in in_cycle:
            adj[a].append(b)
    comp = _scc(adj)
    for a, b, flagged in edges:
        if flagged and a in in_cycle and b in in_cycle and comp[a] == comp[b]:
            return False
    return True


def _scc(adj: dict[int, list[int]]) -> dict[int, int]:
    """Strongly connected components by iterative Tarjan."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on: set[int] = set()
    stack: list[int] = []
    comp: dict[int, int] = {}
    counter = 0
    for root in adj:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp[w] = v
                    if w == v:
                        break
    return comp


# ---------------------------------------------------------------- composite checks


@dataclass(frozen=True)
class ProofVerdict:
    ok: bool
    stage: str  # "ok", "local", "progress", "conclusion"
    detail: object = None

    def __bool__(self) -> bool:
        return self.ok


def check_proof(d: Derivation, expected: frozenset[Formula] | None = None,
                reg: OpSemRegistry | None = None,
                opts: KernelOptions = KernelOptions()) -> ProofVerdict:
    """Local validity, then progress, then the conclusion."""
    local = check_local(d, reg, opts)
    if not local:
        return ProofVerdict(False, "local", local)
    prog = check_progress(d, reg)
    if not prog:
        return ProofVerdict(False, "progress", prog)
    if expected is not None and d.conclusion != frozenset(expected):
        return ProofVerdict(False, "conclusion", d.conclusion)
    return ProofVerdict(True, "ok")


# ---------------------------------------------------------------- unfolding


def unfold(d: Derivation, depth: int) -> PTree:
    """Finite approximation: each path may follow at most ``depth`` back-edges."""
    if depth < 0:
        raise ValueError("depth must be non-negative")

    def go(nid: str, used: int) -> PTree:
        node = d.nodes[nid]
        app = node.app
        if app.rule == "loop":
            if used >= depth:
                return open_leaf(node.seq)
            return go(app.target, used + 1)  # type: ignore[arg-type]
        return PTree(node.seq, app.rule, tuple(go(p, used) for p in app.premises),
                     app.principal, app.cut_formula, app.k_label)

    return go(d.root, 0)


@dataclass(frozen=True)
class OpenPremise:
    seq: frozenset[Formula]
    designated: Formula
    node: str


def decompose(d: Derivation, reg: OpSemRegistry | None = None) -> tuple[PTree, list[OpenPremise]]:
    """Cut every cycle at its outermost loop target, naming the formula whose thread progresses there."""
    if not d.loop_nodes():
        from .derivation import to_tree

        return to_tree(d), []
    pr = _Progress(d, reg, GRAPH_CAP)
    targets = set(pr.targets)
    outer = [t for t in targets if not any(a in targets for a in d.ancestors(t))]
    premises: list[OpenPremise] = []
    for t in sorted(outer, key=lambda x: list(d.walk()).index(x)):
        premises.append(OpenPremise(d.nodes[t].seq, _designated(pr, t), t))
    cut = set(outer)

    def go(nid: str) -> PTree:
        node = d.nodes[nid]
        if nid in cut:
            return open_leaf(node.seq)
        app = node.app
        return PTree(node.seq, app.rule, tuple(go(p) for p in app.premises),
                     app.principal, app.cut_formula, app.k_label)

    return go(d.root), premises


def _designated(pr: _Progress, t: str) -> Formula:
    d = pr.d
    fs = pr.pos.formulas[t]
    direct = [pr.segment(t, l) for l in pr.loops if d.nodes[l].app.target == t]
    scores = []
    for i, f in enumerate(fs, start=1):
        hits = sum(bool(g.flag[i, i]) for g in direct)
        scores.append((hits, is_start(f), -i, f))
    scores.sort(key=lambda s: (s[0], s[1], s[2]), reverse=True)
    return scores[0][3]


def designated_progresses(d: Derivation, premise: OpenPremise, reg: OpSemRegistry | None = None) -> bool:
    """The designated formula has a K-crossing self-thread on every back-edge into its node."""
    pr = _Progress(d, reg, GRAPH_CAP)
    i = pr.pos.index[premise.node][premise.designated]
    direct = [pr.segment(premise.node, l) for l in pr.loops if d.nodes[l].app.target == premise.node]
    return bool(direct) and all(g.flag[i, i] for g in direct)


__all__ = [
    "Ancestry", "KernelOptions", "Lasso", "NotProgressing", "Ok", "OpenPremise", "ProofVerdict",
    "Progressing", "RuleViolation", "check_local", "check_progress", "check_proof", "decompose",
    "designated_progresses", "immediate_ancestors", "is_start", "unfold", "verify_lasso", "EMPTY",
]
