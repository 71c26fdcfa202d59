"""Building derivations from rule scripts: sequents are computed, not written."""

from __future__ import annotations

from dataclasses import dataclass, field

from .derivation import Derivation, Node, RuleApp
from .opsem import OpSemRegistry
from .proofkernel import _star_unfoldings, premise_actives
from .syntax import Box, Dia, Formula, Program, Stuck, Top, negate, sort_formulas


class TacticError(ValueError):
    pass


@dataclass
class Tac:
    rule: str
    principal: Formula | None = None
    kids: tuple["Tac", ...] = ()
    label: Program | None = None
    cut: Formula | None = None
    tag: str | None = None
    target: str | None = None
    star_form: str = "nested"  # or "seq" for [a;a*]φ
    keep: bool = False  # keep the principal in the premises


def R(rule: str, principal: Formula | None = None, *kids: Tac, **kw) -> Tac:
    return Tac(rule, principal, tuple(kids), **kw)


def K(label: Program, kid: Tac, principal: Formula | None = None, tag: str | None = None) -> Tac:
    return Tac("k", principal, (kid,), label=label, tag=tag)


def Cut(chi: Formula, left: Tac, right: Tac, tag: str | None = None) -> Tac:
    return Tac("cut", None, (left, right), cut=chi, tag=tag)


def Loop(target: str) -> Tac:
    return Tac("loop", target=target)


def Open() -> Tac:
    return Tac("open")


def Close() -> Tac:
    """Weaken down to an axiom, ⊤ or [∅]φ and close."""
    return Tac("close")


def W(fs: Formula | list[Formula], kid: Tac) -> Tac:
    items = [fs] if isinstance(fs, Formula) else list(fs)
    out = kid
    for f in reversed(items):
        out = Tac("w", f, (out,))
    return out


def Keep(f: Formula, kid: Tac) -> Tac:
    """Weaken everything except the given formulas (a list or one formula)."""
    return Tac("keep", f, (kid,))


def premises_of(seq: frozenset[Formula], t: Tac, reg: OpSemRegistry) -> list[frozenset[Formula]]:
    rule, prin = t.rule, t.principal
    if rule == "w":
        if prin not in seq:
            raise TacticError(f"cannot weaken {prin}: not in {sort_formulas(seq)}")
        return [seq - {prin}]
    if rule == "cut":
        return [seq | {t.cut}, seq | {negate(t.cut)}]  # type: ignore[arg-type]
    if rule == "k":
        alpha = t.label
        box = prin
        if box is None:
            boxes = [f for f in sort_formulas(seq) if isinstance(f, Box) and f.prog == alpha]
            if not boxes:
                raise TacticError(f"no [{alpha}] box in {sort_formulas(seq)}")
            box = boxes[0]
        rest = seq - {box}
        if not all(isinstance(f, Dia) and f.prog == alpha for f in rest):
            raise TacticError(f"K on {alpha}: context is not all ⟨{alpha}⟩")
        return [frozenset(f.body for f in rest) | {box.body}]  # type: ignore[union-attr]
    if rule in ("top", "ax", "box_empty", "loop", "open"):
        return []
    if prin is None or prin not in seq:
        raise TacticError(f"{rule}: principal {prin} not in sequent")
    base = seq if t.keep else seq - {prin}
    if rule in ("box_star", "dia_star"):
        unf = _star_unfoldings(prin)[0 if t.star_form == "nested" else 1]  # type: ignore[arg-type]
        if rule == "box_star":
            return [base | {prin.body}, base | {unf}]  # type: ignore[union-attr]
        return [base | {prin.body, unf}]  # type: ignore[union-attr]
    acts = premise_actives(rule, prin, reg)
    if acts is None:
        raise TacticError(f"{rule} does not apply to {prin}")
    return [base | frozenset(a) for a in acts]


def _closing(seq: frozenset[Formula]) -> tuple[str, frozenset[Formula]] | None:
    for f in sort_formulas(seq):
        if isinstance(f, Top):
            return "top", frozenset({f})
        if isinstance(f, Box) and isinstance(f.prog, Stuck):
            return "box_empty", frozenset({f})
        g = negate(f)
        if g in seq and g != f:
            return "ax", frozenset({f, g})
    return None


@dataclass
class _Spec:
    seq: frozenset[Formula]
    app: RuleApp
    kids: list["_Spec"] = field(default_factory=list)
    tag: str | None = None
    target_tag: str | None = None


def _expand(seq: frozenset[Formula], t: Tac, reg: OpSemRegistry) -> _Spec:
    if t.rule == "close":
        got = _closing(seq)
        if got is None:
            raise TacticError(f"nothing closes {sort_formulas(seq)}")
        rule, core = got
        return _expand(seq, W(sort_formulas(seq - core), Tac(rule, tag=t.tag)), reg)
    if t.rule == "keep":
        wanted = t.principal if isinstance(t.principal, list) else [t.principal]
        drop = [f for f in sort_formulas(seq) if f not in wanted]
        return _expand(seq, W(drop, t.kids[0]), reg) if drop else _expand(seq, t.kids[0], reg)
    if t.rule == "k" and isinstance(t.label, Stuck):
        # K is barred on ∅; the box itself closes the sequent
        box = t.principal or next((f for f in sort_formulas(seq)
                                   if isinstance(f, Box) and f.prog == t.label), None)
        if box is None:
            raise TacticError(f"no [{t.label}] box in {sort_formulas(seq)}")
        return _expand(seq, Tac("keep", box, (Tac("box_empty", tag=t.tag),)), reg)
    prem = premises_of(seq, t, reg)
    if len(prem) != len(t.kids):
        raise TacticError(f"{t.rule} yields {len(prem)} premises, script gives {len(t.kids)}")
    app = RuleApp(t.rule, t.principal, t.cut, t.label)
    spec = _Spec(seq, app, [], t.tag, t.target)
    spec.kids = [_expand(p, k, reg) for p, k in zip(prem, t.kids)]
    return spec


def build(seq: frozenset[Formula], script: Tac, reg: OpSemRegistry | None = None) -> Derivation:
    """Run a rule script on a sequent and return the derivation with preorder ids."""
    reg = reg if reg is not None else OpSemRegistry()
    spec = _expand(frozenset(seq), script, reg)
    return from_spec(spec)


def from_spec(spec: _Spec) -> Derivation:
    ids: dict[int, str] = {}
    tags: dict[str, str] = {}
    order: list[_Spec] = []

    def number(s: _Spec) -> None:
        ids[id(s)] = f"n{len(order)}"
        order.append(s)
        if s.tag is not None:
            tags[s.tag] = ids[id(s)]
        for k in s.kids:
            number(k)

    number(spec)
    nodes: dict[str, Node] = {}
    for s in order:
        app = s.app
        prem = tuple(ids[id(k)] for k in s.kids)
        target = None
        if app.rule == "loop":
            if s.target_tag not in tags:
                raise TacticError(f"unknown loop target {s.target_tag}")
            target = tags[s.target_tag]
        nodes[ids[id(s)]] = Node(s.seq, RuleApp(app.rule, app.principal, app.cut_formula,
                                                app.k_label, prem, target))
    return Derivation(nodes, "n0")
