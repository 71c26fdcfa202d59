from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl.derivation import Derivation
from opdl.frontend import parse_proof, parse_sequent
from opdl.generators import ATOMS, LABELS, RULE_NAMES, random_rule_instance
from opdl.kripke import random_frame
from opdl.proofkernel import (
    KernelOptions,
    NotProgressing,
    Progressing,
    RuleViolation,
    check_local,
    check_progress,
    check_proof,
    decompose,
    designated_progresses,
    immediate_ancestors,
    unfold,
    verify_lasso,
)

from opdl.syntax import Box, Dia, Seq, Star, fl_closure

from .conftest import SOUND_FIXTURES, fixture_registry, load_proof, rule_sound_on

seeds = st.integers(0, 2**31 - 1)


class TestFixtures:
    @pytest.mark.parametrize("name", SOUND_FIXTURES)
    def test_accepted(self, name):
        d = load_proof(name)
        verdict = check_proof(d, d.conclusion, fixture_registry())
        assert verdict, verdict.detail

    def test_conclusion_mismatch(self):
        d = load_proof("pi_equiv.proof")
        verdict = check_proof(d, parse_sequent("p"), fixture_registry())
        assert not verdict and verdict.stage == "conclusion"

    def test_unsound_cut(self):
        d = load_proof("unsound_cut.proof")
        assert check_local(d)
        got = check_progress(d)
        assert isinstance(got, NotProgressing)
        assert got.lasso.describe(d) == "n0→n0"
        assert verify_lasso(d, got.lasso)
        assert check_proof(d).stage == "progress"

    def test_atomic_k_option(self):
        d = load_proof("pi_equiv.proof")
        assert check_local(d, fixture_registry(), KernelOptions(atomic_k=True))
        lazy = parse_proof('''(proof
          (node n0 (seq "[a;b]p, <a;b>~p") (rule k (label "a;b") (premises n1)))
          (node n1 (seq "p, ~p") (rule ax)))''')
        assert check_local(lazy)
        assert not check_local(lazy, opts=KernelOptions(atomic_k=True))


class TestLocalViolations:
    def _tamper(self, d: Derivation, nid: str, seq: str) -> Derivation:
        nodes = dict(d.nodes)
        nodes[nid] = replace(nodes[nid], seq=parse_sequent(seq))
        return Derivation(nodes, d.root)

    def test_wrong_premise(self):
        d = load_proof("ax_seq.proof")
        leaf = d.premises(d.root)[0]
        got = check_local(self._tamper(d, leaf, "q"))
        assert isinstance(got, RuleViolation)

    def test_open_needs_permission(self):
        d = parse_proof('(proof (node n0 (seq "p") (rule open)))')
        assert not check_local(d)
        assert check_local(d, opts=KernelOptions(allow_open=True))

    def test_loop_target_must_match(self):
        d = parse_proof('''(proof
          (node n0 (seq "p, q") (rule w (principal "q") (premises n1)))
          (node n1 (seq "p") (rule loop n0)))''')
        assert isinstance(check_local(d), RuleViolation)

    def test_bad_axiom(self):
        d = parse_proof('(proof (node n0 (seq "p, q") (rule ax)))')
        assert not check_local(d)


class TestProgress:
    def test_loop_invariance_progresses(self):
        d = load_proof("loop_invariance.proof")
        assert isinstance(check_progress(d), Progressing)

    def test_decompose_names_a_progressing_formula(self):
        d = load_proof("pi_equiv.proof")
        reg = fixture_registry()
        tree, premises = decompose(d, reg)
        assert premises
        for op in premises:
            assert designated_progresses(d, op, reg)
        assert tree.size() <= len(d.nodes)

    def test_unfold_depths(self):
        d = load_proof("loop_invariance.proof")
        t0, t1 = unfold(d, 0), unfold(d, 1)
        assert t0.count_rule("open") == len(d.loop_nodes())
        assert t1.size() > t0.size()

    def test_ancestors_of_star_box(self):
        d = load_proof("ax_star.proof")
        for nid in d.walk():
            for f in d.nodes[nid].seq:
                for pid, g in immediate_ancestors(d, nid, f):
                    assert g in d.nodes[pid].seq


class TestLocalSoundness:
    @pytest.mark.parametrize("rule", RULE_NAMES)
    @given(seed=seeds, fseed=seeds)
    def test_rule_preserves_truth(self, rule, seed, fseed):
        concl, prems, reg = random_rule_instance(rule, seed)
        frame = random_frame(fseed, 1 + fseed % 5, ATOMS, LABELS)
        assert rule_sound_on(frame, concl, prems, reg, pointwise=rule != "k")

    def test_harness_detects_unsound_rule(self):
        concl, prems = parse_sequent("[a]p"), [parse_sequent("<a>p")]
        frames = [random_frame(s, 3, ATOMS, LABELS) for s in range(50)]
        assert not all(rule_sound_on(f, concl, prems, None, pointwise=True) for f in frames)


def _in_closure(g, fl) -> bool:
    """Membership, reading an iteration step [β;β*]ψ as its nested form [β][β*]ψ."""
    if g in fl:
        return True
    if isinstance(g, (Box, Dia)) and isinstance(g.prog, Seq) and isinstance(g.prog.second, Star) \
            and g.prog.second.body == g.prog.first:
        mk = type(g)
        return mk(g.prog.first, mk(g.prog.second, g.body)) in fl
    return False


class TestAnalyticity:
    @pytest.mark.parametrize("rule", [r for r in RULE_NAMES if r != "cut"])
    @given(seed=seeds)
    def test_cut_free_premises_stay_in_closure(self, rule, seed):
        concl, prems, reg = random_rule_instance(rule, seed)
        fl = fl_closure(concl, reg)
        assert all(_in_closure(g, fl) for p in prems for g in p)

    def test_cut_leaves_the_closure(self):
        concl, prems, reg = random_rule_instance("cut", 3)
        fl = fl_closure(concl, reg)
        assert not all(g in fl for p in prems for g in p)
