"""Seeded random terms: formulas, programs, CCS processes, choreographies, axiom instances, cut corpora."""

from __future__ import annotations

import random
from typing import Any

from . import ccs as C
from . import chor as H
from .derivation import Derivation
from .opsem import OpSemRegistry
from .syntax import (
    EMPTY,
    EPSILON,
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
    Test,
    Top,
    negate,
)

ATOMS = ("p", "q", "r")
LABELS = ("a", "b", "c")
AXIOMS = ("Neg", "K", "A-empty", "A-eps", "A-test", "A-choice", "A-seq", "A-star")


def rng_of(seed: int | random.Random) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


# ---------------------------------------------------------------- logic


def random_literal(rng: random.Random, atoms: tuple[str, ...] = ATOMS) -> Formula:
    a = rng.choice(atoms)
    return Pos(a) if rng.random() < 0.5 else Neg(a)


def random_formula(seed: int | random.Random, depth: int = 3, atoms: tuple[str, ...] = ATOMS,
                   labels: tuple[str, ...] = LABELS, tests: bool = True) -> Formula:
    """A random NNF formula of modal and boolean depth at most ``depth``."""
    rng = rng_of(seed)
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.06:
            return Top()
        if r < 0.12:
            return Bot()
        return random_literal(rng, atoms)
    k = rng.randrange(4)
    if k == 0:
        return Or(random_formula(rng, depth - 1, atoms, labels, tests),
                  random_formula(rng, depth - 1, atoms, labels, tests))
    if k == 1:
        return And(random_formula(rng, depth - 1, atoms, labels, tests),
                   random_formula(rng, depth - 1, atoms, labels, tests))
    mk = Box if k == 2 else Dia
    return mk(random_program(rng, max(0, depth - 1), labels, atoms, tests),
              random_formula(rng, depth - 1, atoms, labels, tests))


def random_prop(seed: int | random.Random, depth: int = 2, atoms: tuple[str, ...] = ATOMS) -> Formula:
    """A random modality-free formula."""
    rng = rng_of(seed)
    if depth <= 0 or rng.random() < 0.3:
        return random_literal(rng, atoms)
    mk = Or if rng.random() < 0.5 else And
    return mk(random_prop(rng, depth - 1, atoms), random_prop(rng, depth - 1, atoms))


def random_program(seed: int | random.Random, depth: int = 3, labels: tuple[str, ...] = LABELS,
                   atoms: tuple[str, ...] = ATOMS, tests: bool = True) -> Program:
    """A random regular program of constructor depth at most ``depth``."""
    rng = rng_of(seed)
    if depth <= 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.05:
            return EPSILON
        if r < 0.08:
            return EMPTY
        if tests and r < 0.18:
            return Test(random_literal(rng, atoms))
        return Inst(rng.choice(labels))
    k = rng.randrange(3)
    if k == 0:
        return Seq(random_program(rng, depth - 1, labels, atoms, tests),
                   random_program(rng, depth - 1, labels, atoms, tests))
    if k == 1:
        return Choice(random_program(rng, depth - 1, labels, atoms, tests),
                      random_program(rng, depth - 1, labels, atoms, tests))
    return Star(random_program(rng, depth - 1, labels, atoms, tests))


def axiom_bindings(name: str, seed: int | random.Random, prog_depth: int = 3,
                   form_depth: int = 1) -> dict[str, Any]:
    """Random bindings for an axiom scheme; the K scheme gets an atomic label."""
    rng = rng_of(seed)
    phi = random_formula(rng, form_depth)
    alpha = random_program(rng, prog_depth)
    if name in ("A-empty", "A-eps"):
        return {"phi": phi}
    if name == "A-test":
        return {"phi": phi, "psi": random_formula(rng, form_depth)}
    if name in ("A-choice", "A-seq"):
        return {"phi": phi, "alpha": alpha, "beta": random_program(rng, prog_depth)}
    if name == "K":
        return {"phi": phi, "psi": random_formula(rng, form_depth), "alpha": Inst(rng.choice(LABELS))}
    if name in ("Neg", "A-star"):
        return {"phi": phi, "alpha": alpha}
    raise ValueError(f"unknown axiom scheme {name!r}")


def axiom_instance(name: str, seed: int | random.Random, prog_depth: int = 3) -> Formula:
    """The formula of a random instance of an axiom scheme."""
    from .templates import template_script

    (f,) = template_script(name, None, **axiom_bindings(name, seed, prog_depth))[0]
    return f


# ---------------------------------------------------------------- CCS


def random_ccs(seed: int | random.Random, n_defs: int = 2, actions: tuple[str, ...] = ("a", "b", "c"),
               depth: int = 2) -> tuple[C.CcsDefs, C.CcsProcess]:
    """Guarded recursive definitions over visible actions and a start process.

    Recursive bodies use no parallel composition and no tau, so no silent
    cycle can arise.
    """
    rng = rng_of(seed)
    names = [f"X{i}" for i in range(n_defs)]

    def body(d: int) -> C.CcsProcess:
        if d <= 0 or rng.random() < 0.25:
            r = rng.random()
            tail: C.CcsProcess = C.NIL if r < 0.4 else C.Name(rng.choice(names))
            return C.Prefix(C.Act(rng.choice(actions)), tail)
        if rng.random() < 0.4:
            return C.Sum(body(d - 1), body(d - 1))
        return C.Prefix(C.Act(rng.choice(actions)), body(d - 1))

    defs = C.CcsDefs({n: body(depth) for n in names})
    start: C.CcsProcess = C.Name(names[0])
    if rng.random() < 0.3:
        start = C.Sum(start, C.Prefix(C.Act(rng.choice(actions)), C.NIL))
    return defs, start


def random_ccs_term(seed: int | random.Random, depth: int = 3, actions: tuple[str, ...] = ("a", "b"),
                    names: tuple[str, ...] = ("X", "Y")) -> C.CcsProcess:
    """Any CCS term, for syntax round trips."""
    rng = rng_of(seed)
    if depth <= 0 or rng.random() < 0.2:
        return C.NIL if rng.random() < 0.5 else C.Name(rng.choice(names))
    k = rng.randrange(5)
    if k == 0:
        r = rng.random()
        act: C.CcsAction = C.TAU if r < 0.2 else C.Act(rng.choice(actions)) if r < 0.6 else C.CoAct(rng.choice(actions))
        return C.Prefix(act, random_ccs_term(rng, depth - 1, actions, names))
    if k == 1:
        return C.Sum(random_ccs_term(rng, depth - 1, actions, names), random_ccs_term(rng, depth - 1, actions, names))
    if k == 2:
        return C.Par(random_ccs_term(rng, depth - 1, actions, names), random_ccs_term(rng, depth - 1, actions, names))
    if k == 3:
        return C.Restrict(rng.choice(actions), random_ccs_term(rng, depth - 1, actions, names))
    return C.Prefix(C.Act(rng.choice(actions)), random_ccs_term(rng, depth - 1, actions, names))


# ---------------------------------------------------------------- choreographies

PIDS = ("p", "q", "r", "s")


def random_instr(rng: random.Random, pids: tuple[str, ...] = PIDS) -> H.ChorInstr:
    k = rng.randrange(3)
    src, dst = rng.sample(pids, 2)
    if k == 0:
        return H.Com(src, rng.choice(("x", "y", "1")), dst, rng.choice(("x", "y")))
    if k == 1:
        return H.Sel(src, dst, rng.choice(("l", "r")))
    return H.Assign(src, rng.choice(("x", "y")), rng.choice(("x", "0", "1")))


def random_chor(seed: int | random.Random, length: int = 3, pids: tuple[str, ...] = PIDS,
                conditionals: bool = True) -> H.Choreography:
    """A finite choreography of instructions and conditionals."""
    rng = rng_of(seed)
    if length <= 0:
        return H.NIL
    if conditionals and rng.random() < 0.2:
        return H.Cond(rng.choice(pids), rng.choice(("c", "d")),
                      random_chor(rng, length // 2, pids, False),
                      random_chor(rng, length // 2, pids, False),
                      random_chor(rng, length - 1, pids, conditionals))
    return H.SeqI(random_instr(rng, pids), random_chor(rng, length - 1, pids, conditionals))


def disjoint_pair_chor(seed: int | random.Random, tail: int = 2) -> H.Choreography:
    """``I₁; I₂; C`` where I₁ and I₂ involve disjoint processes."""
    rng = rng_of(seed)
    a, b, c, d = rng.sample(PIDS, 4)
    i1 = random_instr(rng, (a, b))
    i2 = random_instr(rng, (c, d))
    return H.SeqI(i1, H.SeqI(i2, random_chor(rng, tail)))


# ---------------------------------------------------------------- cut corpus


def _mp_instance(rng: random.Random, reg: OpSemRegistry) -> Derivation:
    from .templates import derive_template, template_script

    name = rng.choice([a for a in AXIOMS if a != "A-empty"])
    b = axiom_bindings(name, rng, prog_depth=2)
    (phi,), script = template_script(name, reg, **b)
    psi = phi if rng.random() < 0.3 else Or(phi, random_formula(rng, 1))
    return derive_template("MP", reg, phi=phi, psi=psi, hypothesis1=script, hypothesis2="prove-atomic")


def _star_instance(rng: random.Random, reg: OpSemRegistry) -> Derivation:
    from .templates import derive_template

    gamma = [random_literal(rng) for _ in range(rng.randrange(3))]
    phi = rng.choice([random_prop(rng, 1), Or(Pos("p"), Neg("p"))])
    return derive_template("star-to-n", reg, gamma=gamma, alpha=Inst(rng.choice(LABELS)), phi=phi,
                           n=rng.randrange(4), hypothesis="prove-atomic")


def _lemma_instance(rng: random.Random, reg: OpSemRegistry) -> Derivation:
    """⊢ A, ψ by a cut on a random χ, both premises found by search (open when search fails)."""
    from .tactics import Cut, build
    from .templates import _hypothesis, template_script

    name = rng.choice(AXIOMS)
    (a,), _ = template_script(name, reg, **axiom_bindings(name, rng, prog_depth=1))
    gamma = frozenset({a, random_literal(rng)})
    chi = random_formula(rng, 2, tests=False)
    left = _hypothesis(gamma | {chi}, "prove-atomic", reg, "l_")
    right = _hypothesis(gamma | {negate(chi)}, "prove-atomic", reg, "r_")
    return build(gamma, Cut(chi, left, right), reg)


def cut_corpus(seed: int = 0, size: int = 100, reg: OpSemRegistry | None = None) -> list[Derivation]:
    """Finite derivations with cuts: MP encodings, star-to-power instances and lemma cuts."""
    rng = rng_of(seed)
    reg = reg if reg is not None else OpSemRegistry()
    makers = (_mp_instance, _star_instance, _lemma_instance)
    return [makers[i % 3](rng, reg) for i in range(size)]


# ---------------------------------------------------------------- rule instances

RULE_NAMES = (
    "top", "ax", "w", "or", "and", "k", "cut",
    "box_eps", "box_empty", "box_test", "box_choice", "box_seq", "box_star",
    "dia_eps", "dia_empty", "dia_test", "dia_choice", "dia_seq", "dia_star",
    "box_O", "dia_O",
)


def random_rule_instance(rule: str, seed: int | random.Random
                         ) -> tuple[frozenset[Formula], list[frozenset[Formula]], OpSemRegistry]:
    """A random instance of a rule: conclusion, premises and the registry it lives in.

    Foreign rules use a random guarded CCS process over the labels a, b, c.
    """
    from .opsem import default_registry
    from .syntax import Stuck, Terminated
    from .tactics import Tac, premises_of

    rng = rng_of(seed)
    reg = OpSemRegistry()
    ctx = frozenset(random_formula(rng, 1) for _ in range(rng.randrange(3)))
    phi = random_formula(rng, 1)
    small = lambda: random_program(rng, 1, tests=False)  # noqa: E731
    if rule == "top":
        return ctx | {Top()}, [], reg
    if rule == "ax":
        return ctx | {phi, negate(phi)}, [], reg
    if rule == "w":
        return ctx | {phi}, [ctx], reg
    if rule == "cut":
        return ctx, [ctx | {phi}, ctx | {negate(phi)}], reg
    if rule == "k":
        lab = Inst(rng.choice(LABELS))
        dias = frozenset(Dia(lab, random_formula(rng, 1)) for _ in range(rng.randrange(3)))
        return dias | {Box(lab, phi)}, [frozenset(d.body for d in dias) | {phi}], reg
    if rule == "box_empty":
        return ctx | {Box(Stuck(), phi)}, [], reg
    if rule in ("or", "and"):
        prin: Formula = (Or if rule == "or" else And)(phi, random_formula(rng, 1))
        seq = ctx | {prin}
        return seq, premises_of(seq, Tac(rule, prin, keep=rng.random() < 0.2), reg), reg
    kind, _, ctor = rule.partition("_")
    mk = Box if kind == "box" else Dia
    if ctor == "eps":
        prog: Program = Terminated()
    elif ctor == "empty":
        prog = Stuck()
    elif ctor == "test":
        prog = Test(random_formula(rng, 1))
    elif ctor == "choice":
        prog = Choice(small(), small())
    elif ctor == "seq":
        prog = Seq(small(), small())
    elif ctor == "star":
        prog = Star(small())
    else:
        defs, start = random_ccs(rng)
        reg = default_registry(defs)
        prog = Foreign("ccs", start)
    prin = mk(prog, phi)
    tac = Tac(rule, prin, star_form=rng.choice(("nested", "seq")), keep=rng.random() < 0.2)
    seq = ctx | {prin}
    return seq, premises_of(seq, tac, reg), reg
