"""Cut-free cyclic proof search, trace-inclusion certificates and derivation templates.

The prover is untrusted: every derivation it returns has been re-checked by
the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .derivation import Derivation
from .errors import BudgetExceeded
from .opsem import OpSemRegistry
from .proofkernel import check_proof
from .syntax import (
    BOT,
    And,
    Box,
    Choice,
    Dia,
    Foreign,
    Formula,
    Inst,
    Or,
    Pos,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Test,
    negate,
    sort_formulas,
)
from .tactics import Tac, K, Keep, Loop, R, W, _closing, build, premises_of

PHI = Pos("@phi")


@dataclass(frozen=True)
class SearchBudget:
    max_distinct_sequents: int = 20_000
    max_depth: int = 200
    max_states: int = 10_000
    atomic_k: bool = False  # never apply K to a compound program

    def __post_init__(self) -> None:
        if min(self.max_distinct_sequents, self.max_depth, self.max_states) <= 0:
            raise ValueError("budgets must be positive")


@dataclass
class Proved:
    derivation: Derivation
    script: Tac = field(repr=False)

    def __bool__(self) -> bool:
        return True


@dataclass
class Failed:
    stuck: list[frozenset[Formula]]
    trace: tuple[Program, ...] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass
class Exhausted:
    reason: str

    def __bool__(self) -> bool:
        return False


ProveResult = Proved | Failed | Exhausted


class _Exhausted(Exception):
    pass


# ---------------------------------------------------------------- general search

_DIA_LIKE = {"or", "dia_eps", "dia_test", "dia_seq", "dia_choice", "dia_star", "dia_O"}
_BOX_UNARY = {"box_eps", "box_test", "box_seq"}


def _rank(rule: str) -> int:
    """Diamonds first, then one-premise boxes, conjunctions, branching boxes, iteration last.

    Unfolding a box before the matching diamond has surfaced can lose an
    identity pair; iteration boxes go last since their unfolding may cycle
    without a K step.
    """
    if rule in _DIA_LIKE:
        return 0
    if rule in _BOX_UNARY:
        return 1
    if rule == "and":
        return 2
    return 4 if rule == "box_star" else 3


def _invertible(f: Formula, reg: OpSemRegistry) -> str | None:
    """The decomposition rule for ``f`` when it is not atomic for K."""
    if isinstance(f, Or):
        return "or"
    if isinstance(f, And):
        return "and"
    if isinstance(f, (Box, Dia)):
        b = isinstance(f, Box)
        p = f.prog
        if isinstance(p, Terminated):
            return "box_eps" if b else "dia_eps"
        if isinstance(p, Test):
            return "box_test" if b else "dia_test"
        if isinstance(p, Choice):
            return "box_choice" if b else "dia_choice"
        if isinstance(p, Seq):
            return "box_seq" if b else "dia_seq"
        if isinstance(p, Star):
            return "box_star" if b else "dia_star"
        if isinstance(p, Foreign):
            return "box_O" if b else "dia_O"
    return None


class _General:
    def __init__(self, reg: OpSemRegistry, budget: SearchBudget) -> None:
        self.reg = reg
        self.budget = budget
        self.seen: set[frozenset[Formula]] = set()
        self.stuck: list[frozenset[Formula]] = []
        self.hit_limit = False
        self.ntag = 0

    def tag(self) -> str:
        self.ntag += 1
        return f"g{self.ntag}"

    def search(self, seq: frozenset[Formula], path: list[tuple[frozenset[Formula], str, int, frozenset[Formula]]],
               nk: int, used: frozenset[Formula] = frozenset()) -> Tac | None:
        """``used`` holds the diamonds already unfolded since the last K."""
        if seq not in self.seen:
            self.seen.add(seq)
            if len(self.seen) > self.budget.max_distinct_sequents:
                raise _Exhausted("distinct sequents")
        if len(path) >= self.budget.max_depth:
            self.hit_limit = True
            return None
        if _closing(seq) is not None:
            return Tac("close")
        for anc, tag, k_at, anc_used in reversed(path):
            if anc == seq:
                if nk > k_at:
                    return Loop(tag)
                if anc_used == used:
                    self.stuck.append(seq)
                    return None
        my_tag = self.tag()
        here = path + [(seq, my_tag, nk, used)]
        for t in self.choices(seq, used):
            got = self.attempt(seq, t, here, nk, used)
            if got is not None:
                got.tag = my_tag
                return got
        self.stuck.append(seq)
        return None

    def attempt(self, seq: frozenset[Formula], t: Tac, path: list, nk: int,
                used: frozenset[Formula] = frozenset()) -> Tac | None:
        if t.rule == "w" and t.kids:
            # a weakening chain in front of a K choice
            chain: list[Formula] = []
            inner = t
            while inner.rule == "w" and inner.kids:
                chain.append(inner.principal)  # type: ignore[arg-type]
                inner = inner.kids[0]
            sub = self.attempt(seq - frozenset(chain), inner, path, nk, used)
            return None if sub is None else W(chain, sub)
        prem = premises_of(seq, t, self.reg)
        nk2 = nk + (t.rule == "k")
        if t.rule == "k":
            used = frozenset()
        elif t.keep:
            used = used | {t.principal}  # type: ignore[arg-type]
        kids = []
        for p in prem:
            sub = self.search(p, path, nk2, used)
            if sub is None:
                return None
            kids.append(sub)
        t.kids = tuple(kids)
        return t

    def choices(self, seq: frozenset[Formula], used: frozenset[Formula] = frozenset()) -> list[Tac]:
        fs = sort_formulas(seq)
        if BOT in seq:
            return [Tac("w", BOT)]
        for f in fs:
            if isinstance(f, Dia) and (isinstance(f.prog, Stuck) or
                                       (isinstance(f.prog, Foreign) and not self.reg.logic_steps(f.prog))):
                return [Tac("w", f)]
        out: list[Tac] = []
        boxes = [f for f in fs if isinstance(f, Box)]
        if len(boxes) == 1 and not self.budget.atomic_k:
            alpha = boxes[0].prog
            rest = seq - {boxes[0]}
            if not isinstance(alpha, (Inst, Stuck)) and all(isinstance(g, Dia) and g.prog == alpha for g in rest):
                out.append(Tac("k", boxes[0], label=alpha))
        ranked = []
        for i, f in enumerate(fs):
            r = _invertible(f, self.reg)
            if r is None:
                continue
            if isinstance(f, Dia):
                # diamonds stay in the premise so that later boxes still meet their duals
                if f in used:
                    continue
                t = Tac(r, f, keep=True)
                if premises_of(seq, t, self.reg)[0] == seq:
                    continue
            else:
                t = Tac(r, f)
            ranked.append((_rank(r), i, t))
        if ranked:
            return out + [min(ranked, key=lambda x: (x[0], x[1]))[2]]
        for b in boxes:
            alpha = b.prog
            drop = [g for g in fs if g != b and not (isinstance(g, Dia) and g.prog == alpha)]
            out.append(W(drop, Tac("k", b, label=alpha)) if drop else Tac("k", b, label=alpha))
        return out


def prove(goal: Sequence[Formula] | frozenset[Formula], reg: OpSemRegistry | None = None,
          budget: SearchBudget = SearchBudget()) -> ProveResult:
    """Root-first search with loop folding; never uses cut."""
    reg = reg if reg is not None else OpSemRegistry()
    seq = frozenset(goal)
    g = _General(reg, budget)
    try:
        script = g.search(seq, [], 0)
    except _Exhausted as exc:
        return Exhausted(str(exc))
    except BudgetExceeded as exc:
        return Exhausted(str(exc))
    if script is None:
        if g.hit_limit:
            return Exhausted("depth limit")
        return Failed(_dedupe(g.stuck))
    d = build(seq, script, reg)
    verdict = check_proof(d, seq, reg)
    if not verdict:
        return Failed([seq], reason=f"kernel rejected the candidate at stage {verdict.stage}")
    return Proved(d, script)


def _dedupe(xs: list[frozenset[Formula]]) -> list[frozenset[Formula]]:
    out: list[frozenset[Formula]] = []
    for x in xs:
        if x not in out:
            out.append(x)
    return out


# ---------------------------------------------------------------- trace inclusion


def _dia_ready(f: Formula) -> bool:
    return not isinstance(f, Dia) or isinstance(f.prog, (Inst, Test))


def _dia_rule(f: Dia, reg: OpSemRegistry) -> tuple[str | None, list[Formula]]:
    """Rule and actives used to saturate a diamond; no rule when it only needs weakening."""
    p, body = f.prog, f.body
    if isinstance(p, Terminated):
        return "dia_eps", [body]
    if isinstance(p, Choice):
        return "dia_choice", [Dia(p.left, body), Dia(p.right, body)]
    if isinstance(p, Seq):
        return "dia_seq", [Dia(p.first, Dia(p.second, body))]
    if isinstance(p, Star):
        return "dia_star", [body, Dia(p.body, Dia(p, body))]
    if isinstance(p, Foreign):
        acts = [Dia(b, Dia(g, body)) for b, g in reg.logic_steps(p)]
        return ("dia_O" if acts else None), acts
    return None, []


class _Inclusion:
    """Subset-construction search for ⊢ ⟨p⟩¬φ, [q]φ."""

    def __init__(self, reg: OpSemRegistry, budget: SearchBudget, phi: Formula, prefix: str) -> None:
        self.reg = reg
        self.budget = budget
        self.phi = phi
        self.nphi = negate(phi)
        self.prefix = prefix
        self.seen: set[frozenset[Formula]] = set()
        self.ntag = 0
        self.failure: Failed | None = None

    def tag(self) -> str:
        self.ntag += 1
        return f"{self.prefix}{self.ntag}"

    def saturate(self, dias: frozenset[Formula], box: Formula) -> tuple[list[Tac], frozenset[Formula]]:
        """Diamond saturation as a chain of principal-retaining steps, then weakening."""
        chain: list[Tac] = []
        cur = set(dias)
        done: set[Formula] = set()
        while True:
            todo = [f for f in sort_formulas(cur) if not _dia_ready(f) and f not in done]
            if not todo:
                break
            f = todo[0]
            done.add(f)
            rule, acts = _dia_rule(f, self.reg)  # type: ignore[arg-type]
            if rule is not None and not set(acts) <= cur:
                chain.append(Tac(rule, f, keep=True))
                cur |= set(acts)
            if len(cur) > self.budget.max_states:
                raise _Exhausted("diamond saturation")
        for f in sort_formulas(done):
            chain.append(Tac("w", f))
        cur -= done
        return chain, frozenset(cur)

    def run(self, dias: frozenset[Formula], box: Formula, path: list[tuple[frozenset[Formula], str]],
            trace: tuple[Program, ...]) -> Tac | None:
        if negate(box) in dias:
            return Keep([box, negate(box)], Tac("ax"))
        chain, ready = self.saturate(dias, box)
        rest = self.box(ready, box, path, trace, [])
        if rest is None:
            return None
        for t in reversed(chain):
            t.kids = (rest,)
            rest = t
        return rest

    def box(self, dias: frozenset[Formula], box: Formula, path, trace, seen_boxes: list[Formula]) -> Tac | None:
        if box in seen_boxes:
            self.failure = Failed([dias | {box}], trace, "silent cycle in the boxed program")
            return None
        seen_boxes = seen_boxes + [box]
        if negate(box) in dias:
            return Keep([box, negate(box)], Tac("ax"))
        if box == self.phi:
            if self.nphi in dias:
                return Keep([self.phi, self.nphi], Tac("ax"))
            self.failure = Failed([dias | {box}], trace, "the boxed program terminates, the other cannot")
            return None
        if not isinstance(box, Box):
            raise ValueError(f"unexpected formula {box}")
        p, body = box.prog, box.body
        if isinstance(p, Stuck):
            return Keep([box], Tac("box_empty"))
        if isinstance(p, (Inst, Test)):
            return self.k_step(dias, box, path, trace)
        if isinstance(p, Terminated):
            kids = [(body,)]
            rule = "box_eps"
        elif isinstance(p, Choice):
            kids = [(Box(p.left, body),), (Box(p.right, body),)]
            rule = "box_choice"
        elif isinstance(p, Seq):
            kids = [(Box(p.first, Box(p.second, body)),)]
            rule = "box_seq"
        elif isinstance(p, Star):
            kids = [(body,), (Box(p.body, box),)]
            rule = "box_star"
        elif isinstance(p, Foreign):
            kids = [(Box(b, Box(g, body)),) for b, g in self.reg.logic_steps(p)]
            rule = "box_O"
        else:
            raise TypeError(p)
        subs = []
        for (f,) in kids:
            sub = self.box(dias, f, path, trace, seen_boxes)
            if sub is None:
                return None
            subs.append(sub)
        return Tac(rule, box, tuple(subs))

    def k_step(self, dias: frozenset[Formula], box: Box, path, trace) -> Tac | None:
        lab = box.prog
        keep = frozenset(f for f in dias if isinstance(f, Dia) and f.prog == lab)
        seq = keep | {box}
        if seq not in self.seen:
            self.seen.add(seq)
            if len(self.seen) > self.budget.max_distinct_sequents:
                raise _Exhausted("distinct sequents")
        for anc, tag in path:
            if anc == seq:
                return Keep(sort_formulas(seq), Loop(tag))
        if len(path) >= self.budget.max_depth:
            raise _Exhausted("depth limit")
        my = self.tag()
        nxt = self.run(frozenset(f.body for f in keep), box.body,  # type: ignore[attr-defined]
                       path + [(seq, my)], trace + (lab,))
        if nxt is None:
            return None
        return Keep(sort_formulas(seq), K(lab, nxt, principal=box, tag=my))


def prove_box_impl(p: Program, q: Program, reg: OpSemRegistry | None = None,
                   budget: SearchBudget = SearchBudget(), phi: Formula = PHI,
                   prefix: str = "i") -> ProveResult:
    """Search for ⊢ ⟨p⟩¬φ, [q]φ, which certifies that the traces of q are traces of p.

    Labels (instructions and tests alike) are treated as symbols and handled
    by K; a failing branch yields a complete trace of q that p lacks.
    """
    reg = reg if reg is not None else OpSemRegistry()
    goal = frozenset({Dia(p, negate(phi)), Box(q, phi)})
    search = _Inclusion(reg, budget, phi, prefix)
    try:
        script = search.run(frozenset({Dia(p, negate(phi))}), Box(q, phi), [], ())
    except _Exhausted as exc:
        return Exhausted(str(exc))
    except BudgetExceeded as exc:
        return Exhausted(str(exc))
    if script is None:
        return search.failure if search.failure is not None else Failed([goal])
    d = build(goal, script, reg)
    verdict = check_proof(d, goal, reg)
    if not verdict:
        return Failed([goal], reason=f"kernel rejected the candidate at stage {verdict.stage}")
    return Proved(d, script)


def prove_box_equiv(p: Program, q: Program, reg: OpSemRegistry | None = None,
                    budget: SearchBudget = SearchBudget(), phi: Formula = PHI) -> tuple[ProveResult, ProveResult]:
    """Both directions: ⊢ ⟨p⟩¬φ,[q]φ and ⊢ ⟨q⟩¬φ,[p]φ."""
    return (prove_box_impl(p, q, reg, budget, phi, "l"),
            prove_box_impl(q, p, reg, budget, phi, "r"))


def equiv_certificate(p: Program, q: Program, left: Proved, right: Proved,
                      reg: OpSemRegistry | None = None, phi: Formula = PHI) -> Derivation:
    """Assemble ⊢ [p]φ ⇔ [q]φ from the two inclusion derivations."""
    bp, bq = Box(p, phi), Box(q, phi)
    f = And(Or(negate(bp), bq), Or(negate(bq), bp))
    script = R("and", f, R("or", f.left, left.script), R("or", f.right, right.script))
    return build(frozenset({f}), script, reg)
