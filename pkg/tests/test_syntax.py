from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from opdl.generators import random_formula, random_program
from opdl.syntax import (
    EPSILON,
    And,
    Box,
    Choice,
    Dia,
    Inst,
    Neg,
    Or,
    Pos,
    Seq,
    Star,
    Test as Guard,
    atoms_of,
    big_or,
    fl_closure,
    labels_of,
    negate,
    program_power,
    render_sequent,
    size,
    sort_formulas,
)

seeds = st.integers(0, 2**32 - 1)
p, q = Pos("p"), Pos("q")
a, b = Inst("a"), Inst("b")


class TestConstruction:
    def test_structural_equality(self):
        assert Box(Seq(a, b), p) == Box(Seq(Inst("a"), Inst("b")), Pos("p"))
        assert hash(Box(a, p)) == hash(Box(Inst("a"), Pos("p")))
        assert Box(a, p) != Dia(a, p)

    def test_size_counts_constructors(self):
        assert size(Box(Star(a), Or(p, q))) == 6
        assert size(Guard(p)) == 2

    def test_atoms_and_labels(self):
        f = Dia(Choice(a, Guard(q)), And(p, Box(Star(b), Neg("r"))))
        assert atoms_of(f) == {"p", "q", "r"}
        assert labels_of(f) == {"a", "b"}

    def test_program_power(self):
        assert program_power(a, 0) == EPSILON
        assert program_power(a, 1) == a
        assert program_power(a, 3) == Seq(a, Seq(a, a))

    def test_big_or_empty_is_false(self):
        assert str(big_or([])) == "false"
        assert big_or([p, q]) == Or(p, q)


class TestNegation:
    def test_dualities(self):
        assert negate(Box(a, p)) == Dia(a, Neg("p"))
        assert negate(Or(p, Neg("q"))) == And(Neg("p"), q)

    @given(seeds)
    def test_involution(self, seed):
        f = random_formula(seed, 4)
        assert negate(negate(f)) == f

    @given(seeds)
    def test_size_preserved(self, seed):
        f = random_formula(seed, 4)
        assert size(negate(f)) == size(f)


class TestRendering:
    def test_precedence(self):
        assert str(Box(Seq(Choice(a, b), Star(a)), Or(p, And(q, p)))) == "[(a + b);a*](p | q & p)"
        assert str(Dia(Guard(Neg("p")), p)) == "<?~p>p"

    def test_sequent_order_is_deterministic(self):
        fs = [Box(a, p), q, Or(p, q)]
        assert render_sequent(fs) == render_sequent(reversed(fs)) == "q, [a]p, p | q"
        assert sort_formulas(fs)[0] == q


class TestClosure:
    def test_star_unfolds(self):
        f = Box(Star(a), p)
        assert fl_closure([f]) == {f, p, Box(a, f)}

    @given(seeds)
    def test_closed_and_contains_input(self, seed):
        f = random_formula(seed, 3)
        cl = fl_closure([f])
        assert f in cl
        assert fl_closure(cl) == cl

    @given(seeds)
    def test_linear_in_size(self, seed):
        f = random_formula(seed, 3)
        assert len(fl_closure([f])) <= 3 * size(f)

    @given(seeds)
    def test_programs_render_nonempty(self, seed):
        assert str(random_program(seed, 4))
