from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl import ccs as C
from opdl.errors import BudgetExceeded, RegistryError
from opdl.frontend import parse_ccs, parse_program
from opdl.generators import random_program
from opdl.opsem import (
    Counterexample,
    Distinguished,
    Equivalent,
    Included,
    OpSemRegistry,
    accepts,
    default_registry,
    explore,
    kleene_step,
    lts_to_dot,
    trace_equiv,
    trace_included,
    trace_str,
    traces_upto,
)
from opdl.syntax import EPSILON, Choice, Foreign, Inst, Program, Seq, Star, Stuck, Terminated

from .conftest import FIXTURES

seeds = st.integers(0, 2**31 - 1)
N = 5


def words(p: Program, n: int) -> set[tuple[str, ...]]:
    """Words of length at most n in the language of a test-free regular program."""
    if isinstance(p, Terminated):
        return {()}
    if isinstance(p, Stuck):
        return set()
    if isinstance(p, Inst):
        return {(p.name,)} if n >= 1 else set()
    if isinstance(p, Choice):
        return words(p.left, n) | words(p.right, n)
    if isinstance(p, Seq):
        return {u + v for u in words(p.first, n) for v in words(p.second, n - len(u))}
    if isinstance(p, Star):
        out, frontier = {()}, {()}
        body = {w for w in words(p.body, n) if w}
        while frontier:
            frontier = {u + v for u in frontier for v in body if len(u) + len(v) <= n} - out
            out |= frontier
        return out
    raise TypeError(p)


def kleene(text_or_prog):
    reg = OpSemRegistry()
    p = parse_program(text_or_prog) if isinstance(text_or_prog, str) else text_or_prog
    return p, reg.kleene


def equiv(p: Program, q: Program):
    reg = OpSemRegistry()
    return trace_equiv(p, q, reg.kleene)


class TestKleeneSteps:
    def test_steps(self):
        a, b = Inst("a"), Inst("b")
        assert kleene_step(Seq(a, b)) == [(a, b)]
        assert kleene_step(Choice(a, b)) == [(EPSILON, a), (EPSILON, b)]
        assert kleene_step(Star(a)) == [(EPSILON, EPSILON), (EPSILON, Seq(a, Star(a)))]
        assert kleene_step(EPSILON) == []

    def test_foreign_needs_registry(self):
        with pytest.raises(RegistryError):
            kleene_step(Foreign("ccs", C.Name("X")))

    def test_foreign_logic_steps(self):
        reg = default_registry(parse_ccs((FIXTURES / "pi.ccs").read_text())[0])
        got = reg.logic_steps(Foreign("ccs", C.Name("P2")))
        assert [(str(b), str(g)) for b, g in got] == [("a", "ccs{b.P2 + c.0}")]
        assert reg.logic_steps(parse_program("ccs{c.0}")) == [(Inst("c"), EPSILON)]

    def test_unknown_semantics(self):
        with pytest.raises(RegistryError):
            OpSemRegistry().logic_steps(Foreign("nope", 1))


class TestExploration:
    def test_lts_of_star(self):
        p, sem = kleene("a*")
        lts = explore(p, sem)
        assert [str(s) for s in lts.states] == ["a*", "a;a*", "skip"] and lts.terminal == {2}
        assert "doublecircle" in lts_to_dot(lts)

    def test_truncation(self):
        defs = parse_ccs("X := a.(X | X)")[0]
        reg = default_registry(defs)
        lts = explore(C.Name("X"), reg["ccs"], 20)
        assert lts.truncated
        with pytest.raises(BudgetExceeded):
            traces_upto(C.Name("X"), reg["ccs"], 3, max_states=20)

    def test_traces(self):
        p, sem = kleene("a;(b + c)")
        assert {trace_str(t) for t in traces_upto(p, sem, 3, "complete")} == {"a;b", "a;c"}
        assert {trace_str(t) for t in traces_upto(p, sem, 3, "prefix")} == {"skip", "a", "a;b", "a;c"}

    @given(seeds)
    def test_traces_match_language(self, seed):
        p = random_program(seed, 3, tests=False)
        p_, sem = kleene(p)
        got = {tuple(str(x) for x in t) for t in traces_upto(p, sem, N, "complete")}
        assert got == words(p, N)


class TestTraceEquivalence:
    @pytest.mark.parametrize("left,right", [
        ("a;(b + c)", "a;b + a;c"),
        ("(a + b)*", "(a*;b*)*"),
        ("a;a*", "a*;a"),
        ("abort;a", "abort"),
    ])
    def test_equivalent(self, left, right):
        assert equiv(parse_program(left), parse_program(right)) == Equivalent()

    def test_distinguished_shortest(self):
        got = equiv(parse_program("a;b"), parse_program("a;c"))
        assert isinstance(got, Distinguished)
        assert trace_str(got.trace) == "a;b" and got.side == "left"

    def test_ccs_fixture_pair(self):
        reg = default_registry(parse_ccs((FIXTURES / "pi.ccs").read_text())[0])
        assert trace_equiv(C.Name("P1"), C.Name("P2"), reg["ccs"]) == Equivalent()

    @given(seeds, seeds)
    def test_agrees_with_language_oracle(self, s1, s2):
        p = random_program(s1, 3, labels=("a", "b"), tests=False)
        q = random_program(s2, 3, labels=("a", "b"), tests=False)
        got = equiv(p, q)
        wp, wq = words(p, N), words(q, N)
        if isinstance(got, Equivalent):
            assert wp == wq
        else:
            assert isinstance(got, Distinguished)
            t = tuple(str(x) for x in got.trace)
            assert len(t) > N or (t in wp) != (t in wq)
            _, sem = kleene(p)
            assert accepts(p, sem, got.trace) == (got.side == "left")
            assert accepts(q, sem, got.trace) == (got.side == "right")

    @given(seeds)
    def test_reflexive(self, seed):
        p = random_program(seed, 3)
        assert equiv(p, p) == Equivalent()


class TestInclusion:
    def test_included(self):
        p, sem = kleene("a*")
        assert trace_included(p, parse_program("a;a"), sem) == Included()

    def test_counterexample(self):
        p, sem = kleene("a*")
        got = trace_included(p, parse_program("a;b"), sem)
        assert isinstance(got, Counterexample) and str(got) == "a;b"

    @given(seeds, seeds)
    def test_choice_contains_both(self, s1, s2):
        p = random_program(s1, 2, tests=False)
        q = random_program(s2, 2, tests=False)
        _, sem = kleene(p)
        assert trace_included(Choice(p, q), p, sem) == Included()
        assert trace_included(Choice(p, q), q, sem) == Included()
