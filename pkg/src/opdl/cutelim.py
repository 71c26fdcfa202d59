"""Cut-elimination steps on finite derivation trees, cut-free prefixes and the canonical strategy.

The cut rule shares its context, so reducts re-fit contexts with weakening
nodes.  Weakening chains that sit directly above a cut are treated as part
of the cut's context: a step looks through them to the first logical rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .derivation import Derivation, PTree, from_tree, open_leaf, to_tree
from .errors import OpdlError
from .opsem import OpSemRegistry
from .proofkernel import (
    KernelOptions,
    _star_unfoldings,
    check_local,
    k_principal,
    premise_actives,
    unfold,
)
from .syntax import Box, Dia, Foreign, Formula, Inst, Star, negate, sort_formulas

STEP_IDS = (
    "weak-left", "weak-right", "ax-left", "ax-right",
    "empty-key", "and-or-key", "eps-key", "test-key", "choice-key", "seq-key", "star-key",
    "O-key", "k-key",
    "commute-left-unary", "commute-left-binary", "commute-right-unary", "commute-right-binary",
)

_KEY_PAIRS = {
    "and": "or", "box_eps": "dia_eps", "box_test": "dia_test", "box_choice": "dia_choice",
    "box_seq": "dia_seq", "box_star": "dia_star", "box_O": "dia_O",
}
_KEY_NAME = {
    "and": "and-or-key", "box_eps": "eps-key", "box_test": "test-key", "box_choice": "choice-key",
    "box_seq": "seq-key", "box_star": "star-key", "box_O": "O-key",
}
_LEAVES = ("ax", "top", "box_empty", "open", "loop")

Path = tuple[int, ...]


class CutElimError(OpdlError):
    """A step was requested where it does not apply, or the input is unsupported."""


@dataclass(frozen=True)
class StepChoice:
    step: str

    def __post_init__(self) -> None:
        if self.step not in STEP_IDS:
            raise ValueError(f"unknown step {self.step!r}")

    def __str__(self) -> str:
        return self.step


@dataclass
class ReductionTrace:
    """Derivations σ₀, σ₁, ... and the (cut position, step) that produced each next one."""

    derivations: list[PTree] = field(default_factory=list)
    log: list[tuple[Path, StepChoice]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.log)


@dataclass
class Elimination:
    cf: PTree
    trace: ReductionTrace
    final: PTree

    @property
    def complete(self) -> bool:
        """True when the final derivation has no cut left."""
        return self.final.is_cut_free()

    def __bool__(self) -> bool:
        return True


@dataclass
class FuelExhausted:
    partial: PTree
    trace: ReductionTrace
    final: PTree

    def __bool__(self) -> bool:
        return False


# ---------------------------------------------------------------- tree helpers


def subtree(t: PTree, path: Path) -> PTree:
    for i in path:
        t = t.children[i]
    return t


def replace_at(t: PTree, path: Path, new: PTree) -> PTree:
    if not path:
        return new
    kids = list(t.children)
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return t.with_children(tuple(kids))


def fit(t: PTree, seq: frozenset[Formula]) -> PTree:
    """Weaken ``t`` up to ``seq``; ``t`` must prove a subset of it."""
    if not t.seq <= seq:
        raise CutElimError(f"cannot weaken {t.seq} to {seq}")
    extra = sort_formulas(seq - t.seq)
    out = t
    cur = t.seq
    for f in reversed(extra):
        cur = cur | {f}
        out = PTree(cur, "w", (out,), principal=f)
    return out


def mk_cut(gamma: frozenset[Formula], chi: Formula, left: PTree, right: PTree) -> PTree:
    """A cut on ``chi`` with conclusion ``gamma``; trivial cuts collapse to one side."""
    nchi = negate(chi)
    if not left.seq <= gamma | {chi} or not right.seq <= gamma | {nchi}:
        raise CutElimError("cut premises do not fit the conclusion")
    if chi in gamma or chi not in left.seq:
        return fit(left, gamma)
    if nchi in gamma or nchi not in right.seq:
        return fit(right, gamma)
    return PTree(gamma, "cut", (fit(left, gamma | {chi}), fit(right, gamma | {nchi})), cut_formula=chi)


def _through(t: PTree) -> PTree:
    """First non-weakening node of a weakening chain."""
    while t.rule == "w":
        t = t.children[0]
    return t


def principal_of(t: PTree, reg: OpSemRegistry) -> Formula | None:
    """The principal formula of a logical rule, inferred when not annotated."""
    if t.rule in _LEAVES or t.rule == "cut":
        return None
    if t.rule == "k":
        return k_principal(t.seq, t.principal, t.k_label, t.children[0].seq)  # type: ignore[arg-type]
    if t.principal is not None:
        return t.principal
    for cand in sort_formulas(t.seq):
        if _actives(t, cand, reg) is not None:
            return cand
    return None


def _actives(t: PTree, prin: Formula, reg: OpSemRegistry) -> list[list[Formula]] | None:
    """Actives per premise of ``t`` read with principal ``prin``, or None if they do not fit."""
    if t.rule in ("box_star", "dia_star"):
        want = Box if t.rule == "box_star" else Dia
        if not (isinstance(prin, want) and isinstance(prin.prog, Star)):
            return None
        for unf in _star_unfoldings(prin):
            acts = [[prin.body], [unf]] if t.rule == "box_star" else [[prin.body, unf]]
            if len(acts) == len(t.children) and all(_fits(t.seq, prin, a, c.seq)
                                                    for a, c in zip(acts, t.children)):
                return acts
        return None
    acts = premise_actives(t.rule, prin, reg)
    if acts is None or len(acts) != len(t.children):
        return None
    if t.rule == "box_O":
        # premises may come in any order; realign the actives with them
        out, unused = [], list(range(len(acts)))
        for c in t.children:
            hit = next((i for i in unused if _fits(t.seq, prin, acts[i], c.seq)), None)
            if hit is None:
                return None
            unused.remove(hit)
            out.append(acts[hit])
        return out
    return acts if all(_fits(t.seq, prin, a, c.seq) for a, c in zip(acts, t.children)) else None


def _fits(concl: frozenset[Formula], prin: Formula, acts: list[Formula], prem: frozenset[Formula]) -> bool:
    a = frozenset(acts)
    return prem == (concl - {prin}) | a or prem == concl | a


# ---------------------------------------------------------------- steps


class _Cut:
    """A cut node viewed through the weakenings above its premises."""

    def __init__(self, t: PTree, reg: OpSemRegistry) -> None:
        if t.rule != "cut":
            raise CutElimError("not a cut node")
        self.t = t
        self.reg = reg
        self.gamma = t.seq
        self.chi: Formula = t.cut_formula  # type: ignore[assignment]
        self.left = _through(t.children[0])
        self.right = _through(t.children[1])

    def applicable(self) -> list[str]:
        return [s for s in STEP_IDS if self.reduct(s) is not None]

    def reduct(self, step: str) -> PTree | None:
        chi, nchi, left, right = self.chi, negate(self.chi), self.left, self.right
        if step == "weak-left":
            return fit(left, self.gamma) if chi not in left.seq else None
        if step == "weak-right":
            return fit(right, self.gamma) if nchi not in right.seq else None
        if chi not in left.seq or nchi not in right.seq:
            return None
        if step == "ax-left":
            return fit(right, self.gamma) if left.rule == "ax" else None
        if step == "ax-right":
            return fit(left, self.gamma) if right.rule == "ax" else None
        if step == "empty-key":
            return self._empty()
        if step.endswith("-key"):
            got = self._key(left, right, chi, step)
            if got is None:
                got = self._key(right, left, nchi, step)
            return got
        side, arity = step.split("-")[1:]
        if side == "left":
            return self._commute(left, right, chi, arity)
        return self._commute(right, left, nchi, arity)

    # a premise that still holds the cut formula is cut again against the other side
    def _drop(self, p: PTree, chi: Formula, other: PTree) -> PTree:
        if chi not in p.seq:
            return p
        gamma = (p.seq - {chi}) | (other.seq - {negate(chi)})
        return mk_cut(gamma, chi, p, other)

    def _empty(self) -> PTree | None:
        for mine, other, f in ((self.right, self.left, negate(self.chi)), (self.left, self.right, self.chi)):
            if mine.rule == "dia_empty" and principal_of(mine, self.reg) == f:
                return fit(self._drop(mine.children[0], f, other), self.gamma)
        return None

    def _key(self, left: PTree, right: PTree, chi: Formula, step: str) -> PTree | None:
        """Key cases with ``left`` carrying the box (or conjunction) side of the cut."""
        gamma, reg, nchi = self.gamma, self.reg, negate(chi)
        if step == "k-key":
            return self._k_key(left, right, chi)
        if _KEY_NAME.get(left.rule) != step or right.rule != _KEY_PAIRS[left.rule]:
            return None
        if principal_of(left, reg) != chi or principal_of(right, reg) != nchi:
            return None
        lacts = _actives(left, chi, reg)
        racts = _actives(right, nchi, reg)
        if lacts is None or racts is None:
            return None
        lp = [self._drop(c, chi, right) for c in left.children]
        rp = self._drop(right.children[0], nchi, left)
        if len(left.children) == 1:
            (a,), = lacts
            if negate(a) not in racts[0]:
                return None
            return mk_cut(gamma, a, lp[0], rp)
        # a cascade of cuts, one per premise of the box side, ending in the diamond side
        heads = [acts[0] for acts in lacts]
        duals = racts[0]
        if left.rule == "box_star" and negate(heads[1]) not in duals:
            # the two iteration steps use different forms: bring both to [a;a*]
            flat = _star_unfoldings(chi)[1]  # type: ignore[arg-type]
            lp[1] = _to_seq_form(lp[1], heads[1], flat)
            rp = _to_seq_form(rp, duals[1], negate(flat))
            heads[1], duals = flat, [duals[0], negate(flat)]
        if any(negate(h) not in duals for h in heads):
            return None
        acc = rp
        for i in range(len(heads) - 1, -1, -1):
            ctx = gamma | frozenset(negate(h) for h in heads[:i])
            acc = mk_cut(ctx, heads[i], lp[i], acc)
        return acc

    def _k_key(self, left: PTree, right: PTree, chi: Formula) -> PTree | None:
        if left.rule != "k" or right.rule != "k" or left.k_label != right.k_label:
            return None
        if not isinstance(chi, Box) or principal_of(left, self.reg) != chi:
            return None
        nchi = negate(chi)
        rbox = principal_of(right, self.reg)
        if rbox is None or rbox == nchi or nchi not in right.seq:
            return None
        concl = (left.seq - {chi}) | (right.seq - {nchi})
        rest = concl - {rbox}
        prem = frozenset(f.body for f in rest) | {rbox.body}  # type: ignore[attr-defined]
        inner = mk_cut(prem, chi.body, left.children[0], right.children[0])
        return fit(PTree(concl, "k", (inner,), principal=rbox, k_label=left.k_label), self.gamma)

    def _commute(self, mine: PTree, other: PTree, chi: Formula, arity: str) -> PTree | None:
        """Move the cut above the last rule of ``mine`` when ``chi`` is a side formula there."""
        if mine.rule in ("k", "cut", "w", "ax", "top", "box_empty", "open", "loop"):
            return None
        prin = principal_of(mine, self.reg)
        if prin is None or prin == chi:
            return None
        n = len(mine.children)
        if (arity == "unary") != (n <= 1):
            return None
        acts = _actives(mine, prin, self.reg)
        if acts is None:
            return None
        gamma = self.gamma
        kids = []
        for c, a in zip(mine.children, acts):
            keep = prin in c.seq or prin in other.seq or not ((gamma - {prin}) | frozenset(a))
            req = (gamma if keep else gamma - {prin}) | frozenset(a)
            if chi in c.seq:
                kids.append(mk_cut(req, chi, c, other))
            else:
                kids.append(fit(c, req))
        return PTree(gamma, mine.rule, tuple(kids), principal=prin, k_label=mine.k_label)


def _to_seq_form(t: PTree, nested: Formula, flat: Formula) -> PTree:
    """Turn an occurrence of [a][a*]φ (or its dual) into [a;a*]φ with one sequencing rule."""
    if nested == flat or nested not in t.seq:
        return t
    concl = (t.seq - {nested}) | {flat}
    rule = "box_seq" if isinstance(flat, Box) else "dia_seq"
    return PTree(concl, rule, (fit(t, (concl - {flat}) | {nested}),), principal=flat)


# ---------------------------------------------------------------- strategy


def _cut_paths(t: PTree) -> Iterator[Path]:
    """Cut positions, bottom-most first and left to right within a depth."""
    layer: list[tuple[Path, PTree]] = [((), t)]
    while layer:
        nxt = []
        for path, s in layer:
            if s.rule == "cut":
                yield path
            nxt.extend((path + (i,), c) for i, c in enumerate(s.children))
        layer = nxt


def cut_redexes(t: PTree, reg: OpSemRegistry | None = None) -> list[tuple[Path, list[StepChoice]]]:
    """Every cut with the steps that apply to it, bottom-most cuts first."""
    reg = reg if reg is not None else OpSemRegistry()
    return [(p, [StepChoice(s) for s in _Cut(subtree(t, p), reg).applicable()]) for p in _cut_paths(t)]


def apply_step(t: PTree, path: Path, choice: StepChoice | str, reg: OpSemRegistry | None = None) -> PTree:
    """Rewrite the cut at ``path`` with the given step; the rest of the tree is shared."""
    reg = reg if reg is not None else OpSemRegistry()
    step = choice.step if isinstance(choice, StepChoice) else StepChoice(choice).step
    node = subtree(t, path)
    if node.rule != "cut":
        raise CutElimError(f"no cut at {path}")
    got = _Cut(node, reg).reduct(step)
    if got is None:
        raise CutElimError(f"{step} does not apply at {path}")
    if got.seq != node.seq:
        raise CutElimError("step changed the conclusion")  # defensive: fit guarantees equality
    return replace_at(t, path, got)


def cf_prefix(t: PTree) -> PTree:
    """The largest cut-free approximation: bottom-most cuts become open leaves."""
    if t.rule == "cut":
        return open_leaf(t.seq)
    if not t.children:
        return t
    return t.with_children(tuple(cf_prefix(c) for c in t.children))


def canonical_step(t: PTree, reg: OpSemRegistry | None = None) -> tuple[Path, StepChoice] | None:
    """Bottom-most, leftmost reducible cut and the first applicable step in STEP_IDS order.

    The order tries left-side steps before right-side ones, so a cut that
    could commute into either premise goes into the left one.
    """
    reg = reg if reg is not None else OpSemRegistry()
    for path in _cut_paths(t):
        c = _Cut(subtree(t, path), reg)
        for s in STEP_IDS:
            if c.reduct(s) is not None:
                return path, StepChoice(s)
    return None


def uses_compound_k(t: PTree) -> bool:
    return any(s.rule == "k" and not isinstance(s.k_label, (Inst, Foreign)) for s in t.nodes())


def eliminate(d: Derivation | PTree, unfold_depth: int = 1, fuel: int = 10_000,
              reg: OpSemRegistry | None = None) -> Elimination | FuelExhausted:
    """Run the canonical strategy on a finite unfolding of ``d``."""
    reg = reg if reg is not None else OpSemRegistry()
    if isinstance(d, Derivation):
        ok = check_local(d, reg, KernelOptions(allow_open=True))
        if not ok:
            raise CutElimError(f"input is not locally valid: {ok}")
        has_loop = any(n.app.rule == "loop" for n in d.nodes.values())
        t = unfold(d, unfold_depth) if has_loop else to_tree(d)
    else:
        t = d
        ok = check_local(from_tree(t), reg, KernelOptions(allow_open=True))
        if not ok:
            raise CutElimError(f"input is not locally valid: {ok}")
    if uses_compound_k(t):
        raise CutElimError("cut-elimination needs atomic K; expand compound K rules first")
    trace = ReductionTrace([t], [])
    for _ in range(fuel):
        nxt = canonical_step(t, reg)
        if nxt is None:
            return Elimination(cf_prefix(t), trace, t)
        path, choice = nxt
        t = apply_step(t, path, choice, reg)
        trace.derivations.append(t)
        trace.log.append((path, choice))
    if canonical_step(t, reg) is None:
        return Elimination(cf_prefix(t), trace, t)
    return FuelExhausted(cf_prefix(t), trace, t)
