from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl import ccs as C
from opdl import chor as H
from opdl.frontend import (
    ParseError,
    foreign,
    parse_ccs,
    parse_ccs_process,
    parse_chor,
    parse_chor_term,
    parse_formula,
    parse_program,
    parse_proof,
    parse_sequent,
    render,
    render_proof,
)
from opdl.generators import random_ccs_term, random_chor, random_formula, random_program
from opdl.syntax import EMPTY, EPSILON, And, Box, Choice, Dia, Inst, Neg, Or, Pos, Seq, Star
from opdl.syntax import Test as Guard

from .conftest import FIXTURES, PROOF_FIXTURES

seeds = st.integers(0, 2**32 - 1)


class TestLogic:
    def test_formula_examples(self):
        assert parse_formula("[a*]p -> <b>~q") == Or(Dia(Star(Inst("a")), Neg("p")), Dia(Inst("b"), Neg("q")))
        assert parse_formula("~(p & q)") == Or(Neg("p"), Neg("q"))
        assert parse_formula("p | q & r") == Or(Pos("p"), And(Pos("q"), Pos("r")))

    def test_program_examples(self):
        assert parse_program("a;b + c*") == Choice(Seq(Inst("a"), Inst("b")), Star(Inst("c")))
        assert parse_program("?p;skip") == Seq(Guard(Pos("p")), EPSILON)
        assert parse_program("abort") == EMPTY

    def test_sequent(self):
        assert parse_sequent("p, [a]q") == frozenset({Pos("p"), Box(Inst("a"), Pos("q"))})
        assert parse_sequent("") == frozenset()

    def test_foreign_programs(self):
        p = parse_program("ccs{a.b.0 + c.0}")
        assert p == foreign("ccs", C.Sum(C.Prefix(C.Act("a"), C.Prefix(C.Act("b"), C.NIL)),
                                         C.Prefix(C.Act("c"), C.NIL)))
        assert parse_program("ccs{0}") == EPSILON

    @given(seeds)
    def test_formula_round_trip(self, seed):
        f = random_formula(seed, 5)
        assert parse_formula(render(f)) == f

    @given(seeds)
    def test_program_round_trip(self, seed):
        p = random_program(seed, 5)
        assert parse_program(render(p)) == p


class TestProcesses:
    def test_ccs_examples(self):
        p = parse_ccs_process("new a in ('a.0 | a.X)")
        assert p == C.Restrict("a", C.Par(C.Prefix(C.CoAct("a"), C.NIL), C.Prefix(C.Act("a"), C.Name("X"))))

    def test_ccs_definitions(self):
        defs, order = parse_ccs((FIXTURES / "pi.ccs").read_text())
        assert order == ["P1", "P2"]
        assert parse_ccs(defs.render())[0] == defs

    @given(seeds)
    def test_ccs_round_trip(self, seed):
        p = random_ccs_term(seed, 5)
        assert parse_ccs_process(render(p)) == p

    def test_chor_examples(self):
        c = parse_chor_term("p.x -> q.y; q -> r[l]; if r.b { r.z := 1; 0 } else { 0 }; 0")
        assert isinstance(c, H.SeqI) and c.instr == H.Com("p", "x", "q", "y")

    def test_chor_definitions_need_a_process(self):
        with pytest.raises(ParseError):
            parse_chor("X := X")

    @given(seeds)
    def test_chor_round_trip(self, seed):
        c = random_chor(seed, 6)
        assert parse_chor_term(render(c)) == c


class TestProofs:
    @pytest.mark.parametrize("name", PROOF_FIXTURES)
    def test_fixture_round_trip(self, name):
        d = parse_proof((FIXTURES / name).read_text())
        again = parse_proof(render_proof(d))
        assert again.nodes == d.nodes and again.root == d.root

    def test_comments_and_loops(self):
        d = parse_proof((FIXTURES / "unsound_cut.proof").read_text())
        assert d.loop_nodes() == ["n1"]
        assert d.conclusion == frozenset({Pos("p")})


class TestErrors:
    @pytest.mark.parametrize("text,line,col", [
        ("[a p", 1, 4),
        ("p &", 1, 4),
        ("<a>", 1, 4),
    ])
    def test_formula_error_position(self, text, line, col):
        with pytest.raises(ParseError) as err:
            parse_formula(text)
        assert (err.value.span.line, err.value.span.column) == (line, col)

    def test_proof_error_points_into_embedded_formula(self):
        text = '(proof\n  (node n0 (seq "p &") (rule ax)))'
        with pytest.raises(ParseError) as err:
            parse_proof(text)
        assert err.value.span.line == 2

    def test_unknown_rule_lists_alternatives(self):
        with pytest.raises(ParseError) as err:
            parse_proof('(proof (node n0 (seq "p") (rule nope)))')
        assert "ax" in err.value.expected

    def test_unbalanced(self):
        with pytest.raises(ParseError):
            parse_proof('(proof (node n0 (seq "p") (rule ax))')
