from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl import chor as H
from opdl.ccs import Ok, check_guarded
from opdl.generators import (
    AXIOMS,
    RULE_NAMES,
    axiom_bindings,
    cut_corpus,
    disjoint_pair_chor,
    random_ccs,
    random_chor,
    random_formula,
    random_program,
    random_rule_instance,
)
from opdl.kripke import random_frame
from opdl.syntax import Inst

seeds = st.integers(0, 10_000)


class TestDeterminism:
    @given(seeds)
    def test_same_seed_same_term(self, seed):
        assert random_formula(seed, 3) == random_formula(seed, 3)
        assert random_program(seed, 3) == random_program(seed, 3)
        assert random_chor(seed, 4) == random_chor(seed, 4)
        assert random_ccs(seed)[0] == random_ccs(seed)[0]

    def test_frames_are_seeded(self):
        a, b = random_frame(5, 4, "pq", "ab"), random_frame(5, 4, "pq", "ab")
        assert a.to_json() == b.to_json()

    def test_corpus_is_seeded(self):
        from opdl.frontend import render_proof

        first = [render_proof(d) for d in cut_corpus(2, 6)]
        assert first == [render_proof(d) for d in cut_corpus(2, 6)]


class TestShapes:
    @given(seeds)
    def test_random_ccs_is_guarded(self, seed):
        defs, _ = random_ccs(seed)
        assert isinstance(check_guarded(defs), Ok)

    @given(seeds)
    def test_disjoint_pair(self, seed):
        c = disjoint_pair_chor(seed)
        assert not H.pn(c.instr) & H.pn(c.cont.instr)

    @given(seeds)
    def test_k_scheme_label_is_atomic(self, seed):
        assert isinstance(axiom_bindings("K", seed)["alpha"], Inst)

    @pytest.mark.parametrize("name", AXIOMS)
    def test_every_scheme_binds_phi(self, name):
        assert "phi" in axiom_bindings(name, 1)

    def test_corpus_has_cuts(self):
        assert all("cut" in d.rules_used() for d in cut_corpus(0, 12))

    @pytest.mark.parametrize("rule", RULE_NAMES)
    def test_rule_instances_have_the_rule_shape(self, rule):
        concl, prems, _ = random_rule_instance(rule, 11)
        assert concl
        if rule in ("top", "ax", "box_empty"):
            assert prems == []
        if rule == "cut":
            assert len(prems) == 2

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            axiom_bindings("nope", 0)
