from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl import ccs as C
from opdl.errors import RegistryError, UnboundName
from opdl.frontend import parse_ccs, parse_ccs_process
from opdl.generators import random_ccs
from opdl.opsem import explore
from opdl.syntax import EPSILON, Inst

seeds = st.integers(0, 2**31 - 1)


def steps(text: str, defs: str = "") -> set[tuple[str, str]]:
    d = parse_ccs(defs)[0] if defs else C.CcsDefs()
    return {(str(a), str(q)) for a, q in C.ccs_step(parse_ccs_process(text), d)}


class TestRules:
    def test_prefix_and_sum(self):
        assert steps("a.0 + b.c.0") == {("a", "0"), ("b", "c.0")}

    def test_parallel_synchronises(self):
        got = steps("a.0 | 'a.0")
        assert ("tau", "0 | 0") in got
        assert ("a", "0 | 'a.0") in got and ("'a", "a.0 | 0") in got

    def test_restriction_blocks_visible_actions(self):
        assert steps("new a in (a.0 | 'a.0)") == {("tau", "new a in (0 | 0)")}

    def test_recursion_unfolds(self):
        assert steps("X", "X := a.X") == {("a", "X")}

    def test_unbound_name(self):
        with pytest.raises(UnboundName):
            steps("Y")

    def test_labels(self):
        assert C.action_label(C.Act("a")) == Inst("a")
        assert C.action_label(C.CoAct("a")) == Inst("a'")
        assert C.action_label(C.TAU) == EPSILON


class TestGuardedness:
    def test_guarded(self):
        assert isinstance(C.check_guarded(parse_ccs("X := a.X + b.Y\nY := c.X")[0]), C.Ok)

    def test_direct_cycle(self):
        got = C.check_guarded(parse_ccs("X := X + a.0")[0])
        assert got == C.Unguarded("X", ["Sum-left"])

    def test_cycle_through_another_definition(self):
        got = C.check_guarded(parse_ccs("X := Y | a.0\nY := X")[0])
        assert isinstance(got, C.Unguarded) and "Rec:Y" in got.path

    def test_registry_rejects_unguarded(self):
        with pytest.raises(RegistryError):
            C.ccs_as_opsem(parse_ccs("X := X")[0])

    @given(seeds)
    def test_generated_definitions_are_guarded(self, seed):
        defs, start = random_ccs(seed)
        assert isinstance(C.check_guarded(defs), C.Ok)
        assert len(explore(start, C.ccs_as_opsem(defs), 500).states) < 500


class TestTermination:
    def test_inert(self):
        assert C.is_inert(parse_ccs_process("0 | new a in 0"))
        assert not C.is_inert(parse_ccs_process("0 | a.0"))
