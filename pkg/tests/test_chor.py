from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl import chor as H
from opdl.errors import UnboundName
from opdl.frontend import parse_chor, parse_chor_term
from opdl.generators import disjoint_pair_chor, random_chor
from opdl.syntax import Neg, Pos
from opdl.syntax import Test as Guard

seeds = st.integers(0, 2**31 - 1)


def steps(text: str, defs: str = "") -> set[tuple[str, str]]:
    d = parse_chor(defs)[0] if defs else H.ChorDefs()
    return {(str(i), str(c)) for i, c in H.chor_step(parse_chor_term(text), d)}


class TestRules:
    def test_atomic(self):
        assert steps("p.x -> q.y; 0") == {("p.x -> q.y", "0")}

    def test_delay_of_disjoint_instruction(self):
        got = steps("p.x -> q.y; r -> s[l]; 0")
        assert got == {("p.x -> q.y", "r -> s[l]; 0"), ("r -> s[l]", "p.x -> q.y; 0")}

    def test_no_delay_when_sharing_a_process(self):
        assert steps("p.x -> q.y; q.y -> r.z; 0") == {("p.x -> q.y", "q.y -> r.z; 0")}

    def test_conditional(self):
        got = steps("if p.b { p.x := 1; 0 } else { 0 }; 0")
        assert got == {("?p.b", "p.x := 1; 0"), ("?~p.b", "0")}

    def test_conditional_delays_common_instruction(self):
        got = steps("if p.b { r -> s[l]; 0 } else { r -> s[l]; 0 }; 0")
        assert ("r -> s[l]", "if p.b { 0 } else { 0 }; 0") in got

    def test_call_lets_each_process_join(self):
        got = steps("X", "X := p.x -> q.y; X")
        assert got == {("X#p", "X#q; p.x -> q.y; X"), ("X#q", "X#p; p.x -> q.y; X")}

    def test_unbound_call(self):
        with pytest.raises(UnboundName):
            steps("Y")

    def test_test_labels(self):
        assert H.instr_label(H.TestPos("p", "b")) == Guard(Pos("p.b"))
        assert H.instr_label(H.TestNeg("p", "b")) == Guard(Neg("p.b"))


class TestProcessNames:
    def test_pn(self):
        c = parse_chor_term("p.x -> q.y; if r.b { s.z := 1; 0 } else { 0 }; 0")
        assert H.pn(c) == {"p", "q", "r", "s"}

    def test_recursive_pn(self):
        defs = parse_chor("X := p -> q[l]; Y\nY := r.x := 1; X")[0]
        assert H.pn(H.Call("X"), defs) == {"p", "q", "r"}

    @given(seeds)
    def test_step_labels_stay_inside_pn(self, seed):
        c = random_chor(seed, 5)
        names = H.pn(c)
        for i, _ in H.chor_step(c, H.ChorDefs()):
            assert H.pn(i) <= names


class TestOutOfOrder:
    @given(seeds)
    def test_leading_pair_commutes(self, seed):
        c = disjoint_pair_chor(seed)
        i1, i2 = c.instr, c.cont.instr
        by = dict()
        for i, k in H.chor_step(c, H.ChorDefs()):
            by.setdefault(i, []).append(k)
        assert i1 in by and i2 in by
        after12 = {k2 for k1 in by[i1] for i, k2 in H.chor_step(k1, H.ChorDefs()) if i == i2}
        after21 = {k2 for k1 in by[i2] for i, k2 in H.chor_step(k1, H.ChorDefs()) if i == i1}
        assert after12 & after21
