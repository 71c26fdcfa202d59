"""Proof graphs (trees with back-edges) and finite open proof trees."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

from .syntax import Formula, Program, render_sequent

RULES = (
    "top", "ax", "w", "or", "and", "k", "cut",
    "box_eps", "box_empty", "box_test", "box_choice", "box_seq", "box_star",
    "dia_eps", "dia_empty", "dia_test", "dia_choice", "dia_seq", "dia_star",
    "box_O", "dia_O", "loop", "open",
)


class DerivationError(ValueError):
    pass


@dataclass(frozen=True)
class RuleApp:
    rule: str
    principal: Formula | None = None
    cut_formula: Formula | None = None
    k_label: Program | None = None
    premises: tuple[str, ...] = ()
    target: str | None = None


@dataclass(frozen=True)
class Node:
    seq: frozenset[Formula]
    app: RuleApp


@dataclass
class Derivation:
    """Nodes by id; premise edges form a tree, ``loop`` nodes point back to an ancestor."""

    nodes: dict[str, Node]
    root: str
    parent: dict[str, str] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.validate()

    @property
    def conclusion(self) -> frozenset[Formula]:
        return self.nodes[self.root].seq

    def premises(self, nid: str) -> tuple[str, ...]:
        return self.nodes[nid].app.premises

    def validate(self) -> None:
        if self.root not in self.nodes:
            raise DerivationError(f"root {self.root} is not a node")
        self.parent = {}
        for nid, node in self.nodes.items():
            if node.app.rule not in RULES:
                raise DerivationError(f"node {nid}: unknown rule {node.app.rule}")
            for p in node.app.premises:
                if p not in self.nodes:
                    raise DerivationError(f"node {nid}: dangling premise {p}")
                if p in self.parent or p == self.root:
                    raise DerivationError(f"node {p} has more than one parent")
                self.parent[p] = nid
            if node.app.rule == "loop":
                if node.app.premises:
                    raise DerivationError(f"loop node {nid} cannot have premises")
                if node.app.target not in self.nodes:
                    raise DerivationError(f"loop node {nid}: dangling target {node.app.target}")
        reached = set(self.walk())
        if reached != set(self.nodes):
            missing = sorted(set(self.nodes) - reached)
            raise DerivationError(f"unreachable nodes: {missing}")
        for nid, node in self.nodes.items():
            if node.app.rule == "loop":
                tgt = node.app.target
                assert tgt is not None
                if tgt not in self.ancestors(nid):
                    raise DerivationError(f"loop node {nid}: target {tgt} is not a strict ancestor")

    def walk(self) -> Iterator[str]:
        """Node ids in preorder."""
        stack = [self.root]
        while stack:
            nid = stack.pop()
            yield nid
            stack.extend(reversed(self.nodes[nid].app.premises))

    def ancestors(self, nid: str) -> list[str]:
        out = []
        while nid in self.parent:
            nid = self.parent[nid]
            out.append(nid)
        return out

    def loop_nodes(self) -> list[str]:
        return [n for n in self.walk() if self.nodes[n].app.rule == "loop"]

    def open_nodes(self) -> list[str]:
        return [n for n in self.walk() if self.nodes[n].app.rule == "open"]

    def is_cyclic(self) -> bool:
        return bool(self.loop_nodes())

    def rules_used(self) -> set[str]:
        return {n.app.rule for n in self.nodes.values()}

    def successor_ids(self, nid: str) -> tuple[str, ...]:
        """Premises, or the loop target for a back-edge."""
        app = self.nodes[nid].app
        if app.rule == "loop":
            return (app.target,)  # type: ignore[return-value]
        return app.premises


# ---------------------------------------------------------------- finite trees


@dataclass(frozen=True)
class PTree:
    """A finite, possibly open, derivation tree (no back-edges)."""

    seq: frozenset[Formula]
    rule: str
    children: tuple["PTree", ...] = ()
    principal: Formula | None = None
    cut_formula: Formula | None = None
    k_label: Program | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", None)

    def __hash__(self) -> int:
        h = self.__dict__["_h"]
        if h is None:
            h = hash((self.seq, self.rule, self.children, self.principal,
                      self.cut_formula, self.k_label))
            object.__setattr__(self, "_h", h)
        return h

    def with_children(self, children: tuple["PTree", ...]) -> "PTree":
        return replace(self, children=children)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=0)

    def nodes(self) -> Iterator["PTree"]:
        stack = [self]
        while stack:
            t = stack.pop()
            yield t
            stack.extend(t.children)

    def count_rule(self, rule: str) -> int:
        return sum(1 for t in self.nodes() if t.rule == rule)

    def is_cut_free(self) -> bool:
        return self.count_rule("cut") == 0

    def __str__(self) -> str:
        return f"{self.rule}: {render_sequent(self.seq)}"


def open_leaf(seq: frozenset[Formula]) -> PTree:
    return PTree(seq, "open")


def to_tree(d: Derivation, nid: str | None = None) -> PTree:
    """Finite tree of a loop-free derivation."""
    nid = d.root if nid is None else nid
    node = d.nodes[nid]
    if node.app.rule == "loop":
        raise DerivationError("to_tree needs a loop-free derivation; use unfold first")
    return PTree(
        node.seq, node.app.rule,
        tuple(to_tree(d, p) for p in node.app.premises),
        node.app.principal, node.app.cut_formula, node.app.k_label,
    )


def from_tree(t: PTree, prefix: str = "n") -> Derivation:
    nodes: dict[str, Node] = {}
    counter = 0

    def go(s: PTree) -> str:
        nonlocal counter
        nid = f"{prefix}{counter}"
        counter += 1
        prem = tuple(go(c) for c in s.children)
        nodes[nid] = Node(s.seq, RuleApp(s.rule, s.principal, s.cut_formula, s.k_label, prem))
        return nid

    root = go(t)
    return Derivation(nodes, root)


def approximates(a: PTree, b: PTree) -> bool:
    """``a`` ⪯ ``b``: ``a`` is ``b`` with some subtrees replaced by open leaves."""
    if a.seq != b.seq:
        return False
    if a.rule == "open":
        return True
    if (a.rule, a.principal, a.cut_formula, a.k_label) != (b.rule, b.principal, b.cut_formula, b.k_label):
        return False
    if len(a.children) != len(b.children):
        return False
    return all(approximates(x, y) for x, y in zip(a.children, b.children))


def renumber(d: Derivation, prefix: str = "n") -> Derivation:
    """Copy with ids n0, n1, ... in preorder."""
    order = list(d.walk())
    new = {old: f"{prefix}{i}" for i, old in enumerate(order)}
    nodes = {}
    for old in order:
        node = d.nodes[old]
        app = replace(
            node.app,
            premises=tuple(new[p] for p in node.app.premises),
            target=new[node.app.target] if node.app.target else None,
        )
        nodes[new[old]] = Node(node.seq, app)
    return Derivation(nodes, new[d.root])


def proof_to_dot(d: Derivation) -> str:
    """Graphviz text: premise edges point up, back-edges are dashed."""
    lines = ["digraph proof {", "  rankdir=BT;", "  node [shape=box, fontname=monospace];"]
    for nid in d.walk():
        node = d.nodes[nid]
        app = node.app
        text = f"{nid} [{app.rule}]\\n⊢ {render_sequent(node.seq)}".replace('"', '\\"')
        lines.append(f'  {nid} [label="{text}"];')
        for p in app.premises:
            lines.append(f"  {nid} -> {p};")
        if app.rule == "loop":
            lines.append(f"  {nid} -> {app.target} [style=dashed];")
    lines.append("}")
    return "\n".join(lines)
