from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opdl.ccs import NIL, Act, CcsDefs, Name, Prefix, Restrict
from opdl.frontend import parse_formula, parse_sequent
from opdl.generators import AXIOMS, axiom_bindings, random_formula, random_program
from opdl.opsem import default_registry
from opdl.proofkernel import KernelOptions, check_proof
from opdl.syntax import Box, Foreign, Inst, Or, Star, Stuck, negate, program_power
from opdl.templates import TEMPLATES, TemplateError, derive_template

OPEN = KernelOptions(allow_open=True)
seeds = st.integers(0, 10_000)


def _rules(d) -> list[str]:
    return [d.nodes[n].app.rule for n in d.walk() if d.nodes[n].app is not None]


class TestShapes:
    def test_a_empty_is_one_node(self):
        d = derive_template("A-empty", phi=parse_formula("p"))
        assert len(d.nodes) == 1 and _rules(d) == ["box_empty"]

    def test_li_has_one_back_edge_and_a_cut(self):
        d = derive_template("LI", phi=parse_formula("[a*]q"), alpha=Inst("a"))
        assert len(d.loop_nodes()) == 1
        assert "cut" in d.rules_used()
        assert check_proof(d, parse_sequent("<a*>~q, [a*][a*]q"))

    def test_li_open_hypothesis(self):
        d = derive_template("LI", phi=parse_formula("p"), alpha=Inst("a"), hypothesis="open")
        assert len(d.open_nodes()) == 1
        assert not check_proof(d)
        assert check_proof(d, parse_sequent("~p, [a*]p"), opts=OPEN)

    def test_star_to_n_with_context(self):
        a, p = Inst("a"), parse_formula("p")
        d = derive_template("star-to-n", gamma=[parse_formula("q")], alpha=a, phi=p, n=2, hypothesis="open")
        assert d.conclusion == frozenset({parse_formula("q"), Box(program_power(a, 2), p)})
        assert check_proof(d, opts=OPEN)
        assert _rules(d).count("k") == 2

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_star_to_n_closed(self, n):
        phi = parse_formula("p | ~p")
        d = derive_template("star-to-n", gamma=[], alpha=Inst("a"), phi=phi, n=n)
        assert check_proof(d, frozenset({Box(program_power(Inst("a"), n), phi)}))

    def test_a_o_on_stuck_process(self):
        reg = default_registry(CcsDefs())
        stuck = Foreign("ccs", Restrict("a", Prefix(Act("a"), NIL)))
        d = derive_template("A_O", reg, phi=parse_formula("p"), alpha=stuck)
        assert _rules(d) == ["box_O"] and check_proof(d, reg=reg)

    def test_a_o_on_recursive_process(self, reg):
        d = derive_template("A_O", reg, phi=parse_formula("p"), alpha=Foreign("ccs", Name("P1")))
        assert check_proof(d, reg=reg)
        assert {"box_O", "dia_O"} <= d.rules_used()

    def test_mp_uses_two_cuts(self):
        d = derive_template("MP", phi=parse_formula("p | ~p"), psi=parse_formula("q | ~q"))
        assert _rules(d).count("cut") == 2
        assert check_proof(d, parse_sequent("q | ~q"))

    def test_nec(self):
        d = derive_template("NEC", phi=parse_formula("p | ~p"), alpha=Inst("b"))
        assert _rules(d)[0] == "k" and check_proof(d, parse_sequent("[b](p | ~p)"))

    def test_nec_on_abort_needs_no_premise(self):
        d = derive_template("NEC", phi=parse_formula("false"), alpha=Stuck())
        assert _rules(d) == ["box_empty"] and check_proof(d)

    def test_li_on_abort_closes_the_step_box(self):
        d = derive_template("LI", phi=parse_formula("p"), alpha=Stuck(), hypothesis="open")
        labels = [n.app.k_label for n in d.nodes.values() if n.app and n.app.rule == "k"]
        assert Stuck() not in labels and check_proof(d, opts=OPEN)


class TestErrors:
    def test_unknown_template(self):
        with pytest.raises(TemplateError, match="unknown template"):
            derive_template("nope")

    def test_missing_binding(self):
        with pytest.raises(TemplateError, match="missing bindings: alpha"):
            derive_template("LI", phi=parse_formula("p"))

    def test_negative_power(self):
        with pytest.raises(TemplateError):
            derive_template("star-to-n", gamma=[], alpha=Inst("a"), phi=parse_formula("p"), n=-1)

    def test_bad_hypothesis_mode(self):
        with pytest.raises(TemplateError):
            derive_template("NEC", phi=parse_formula("p"), alpha=Inst("a"), hypothesis="maybe")


class TestValidity:
    """Every template passes the kernel for random bindings."""

    @pytest.mark.parametrize("name", AXIOMS)
    @given(seed=seeds)
    def test_axiom_templates(self, name, seed):
        b = axiom_bindings(name, seed)
        d = derive_template(name, **b)
        assert check_proof(d)

    @given(seed=seeds)
    def test_li_random(self, seed):
        d = derive_template("LI", phi=random_formula(seed, 2), alpha=random_program(seed + 1, 2),
                            hypothesis="open")
        assert check_proof(d, opts=OPEN)

    @given(seed=seeds, n=st.integers(0, 3), k=st.integers(0, 2))
    def test_star_to_n_random(self, seed, n, k):
        gamma = [random_formula(seed + i, 1) for i in range(k)]
        d = derive_template("star-to-n", gamma=gamma, alpha=random_program(seed, 2),
                            phi=random_formula(seed + 7, 1), n=n, hypothesis="open")
        assert check_proof(d, opts=OPEN)

    @given(seed=seeds)
    def test_mp_and_nec_random(self, seed):
        phi, psi = random_formula(seed, 2), random_formula(seed + 1, 2)
        d = derive_template("MP", phi=phi, psi=psi, hypothesis1="open", hypothesis2="open")
        assert check_proof(d, frozenset({psi}), opts=OPEN)
        d = derive_template("NEC", phi=phi, alpha=random_program(seed, 2), hypothesis="open")
        assert check_proof(d, opts=OPEN)

    @given(seed=seeds)
    def test_excluded_middle_needs_no_open_leaf(self, seed):
        f = random_formula(seed, 1)
        phi = Or(f, negate(f))
        d = derive_template("NEC", phi=phi, alpha=Star(Inst("a")))
        assert not d.open_nodes() and check_proof(d)

    def test_every_template_covered(self):
        assert set(TEMPLATES) == set(AXIOMS) | {"LI", "star-to-n", "MP", "NEC", "A_O"}
