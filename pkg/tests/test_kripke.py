from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl.generators import ATOMS, LABELS, random_formula, random_program
from opdl.kripke import (
    KripkeFrame,
    NotFound,
    eval_formula,
    eval_program,
    find_countermodel,
    is_valid,
    random_frame,
)
from opdl.syntax import (
    And,
    Bot,
    Box,
    Choice,
    Dia,
    Formula,
    Inst,
    Neg,
    Or,
    Pos,
    Program,
    Seq,
    Star,
    Stuck,
    Terminated,
    Top,
    negate,
)
from opdl.syntax import Test as Guard

seeds = st.integers(0, 2**31 - 1)


def _frame(seed: int, n: int = 4) -> KripkeFrame:
    return random_frame(seed, n, ATOMS, LABELS, density=0.4)


# Reference semantics over explicit pair sets, written independently of the matrix evaluator.

def _rel(frame: KripkeFrame, p: Program) -> set[tuple[int, int]]:
    n = frame.n
    if isinstance(p, Terminated):
        return {(w, w) for w in range(n)}
    if isinstance(p, Stuck):
        return set()
    if isinstance(p, Inst):
        m = frame.rel(p.name)
        return {(i, j) for i in range(n) for j in range(n) if m[i, j]}
    if isinstance(p, Guard):
        return {(w, w) for w in range(n) if _holds(frame, p.formula, w)}
    if isinstance(p, Seq):
        r1, r2 = _rel(frame, p.first), _rel(frame, p.second)
        return {(i, k) for i, j in r1 for j2, k in r2 if j == j2}
    if isinstance(p, Choice):
        return _rel(frame, p.left) | _rel(frame, p.right)
    if isinstance(p, Star):
        out = {(w, w) for w in range(n)}
        step = _rel(frame, p.body)
        while True:
            nxt = out | {(i, k) for i, j in out for j2, k in step if j == j2}
            if nxt == out:
                return out
            out = nxt
    raise TypeError(p)


def _holds(frame: KripkeFrame, f: Formula, w: int) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Pos):
        return bool(frame.atom(f.name)[w])
    if isinstance(f, Neg):
        return not frame.atom(f.name)[w]
    if isinstance(f, Or):
        return _holds(frame, f.left, w) or _holds(frame, f.right, w)
    if isinstance(f, And):
        return _holds(frame, f.left, w) and _holds(frame, f.right, w)
    succ = [v for u, v in _rel(frame, f.prog) if u == w]
    if isinstance(f, Box):
        return all(_holds(frame, f.body, v) for v in succ)
    return any(_holds(frame, f.body, v) for v in succ)


class TestEvaluation:
    def test_hand_computed(self):
        # 0 -a-> 1 -a-> 2, p only at 2
        fr = KripkeFrame(3, {"p": [False, False, True]}, {"a": [[0, 1, 0], [0, 0, 1], [0, 0, 0]]})
        assert list(eval_formula(fr, Dia(Inst("a"), Pos("p")))) == [False, True, False]
        assert list(eval_formula(fr, Dia(Star(Inst("a")), Pos("p")))) == [True, True, True]
        assert list(eval_formula(fr, Box(Inst("a"), Pos("p")))) == [False, True, True]
        assert list(eval_formula(fr, Box(Seq(Inst("a"), Inst("a")), Bot()))) == [False, True, True]

    def test_missing_names_are_empty(self):
        fr = KripkeFrame(2)
        assert not eval_formula(fr, Pos("zz")).any()
        assert eval_formula(fr, Box(Inst("zz"), Bot())).all()

    @given(seeds, seeds)
    def test_matches_reference(self, fseed, seed):
        fr = _frame(fseed)
        f = random_formula(seed, 3)
        got = eval_formula(fr, f)
        assert [bool(x) for x in got] == [_holds(fr, f, w) for w in range(fr.n)]

    @given(seeds, seeds)
    def test_negation_is_complement(self, fseed, seed):
        fr = _frame(fseed)
        f = random_formula(seed, 3)
        assert np.array_equal(eval_formula(fr, negate(f)), ~eval_formula(fr, f))

    @given(seeds, seeds)
    def test_star_is_reflexive_transitive(self, fseed, seed):
        fr = _frame(fseed)
        r = eval_program(fr, Star(random_program(seed, 2)))
        assert r.diagonal().all()
        assert np.array_equal((r.astype(int) @ r.astype(int)) > 0, r)

    def test_json_round_trip(self):
        fr = _frame(7)
        again = KripkeFrame.from_json(fr.to_json())
        f = random_formula(3, 3)
        assert np.array_equal(eval_formula(fr, f), eval_formula(again, f))


class TestCountermodels:
    def test_atom_has_one_world_countermodel(self):
        frame, w = find_countermodel(Pos("p"))
        assert frame.n == 1 and not eval_formula(frame, Pos("p"))[w]

    def test_valid_formula_has_none(self):
        f = Or(Box(Star(Inst("a")), Pos("p")), Dia(Star(Inst("a")), Neg("p")))
        assert isinstance(find_countermodel(f), NotFound)

    @pytest.mark.parametrize("text", ["[a]p | [a]~p", "<a*>p | ~p & [a]q"])
    def test_found_frames_refute(self, text):
        from opdl.frontend import parse_formula

        f = parse_formula(text)
        frame, w = find_countermodel(f)
        assert not is_valid(frame, f)
        assert not eval_formula(frame, f)[w]

    def test_random_frame_rejects_bad_density(self):
        with pytest.raises(ValueError):
            random_frame(0, 2, ATOMS, LABELS, density=1.5)
