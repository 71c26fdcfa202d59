from __future__ import annotations

import json
from pathlib import Path

import pytest

from opdl.cli import main

from .conftest import FIXTURES, PROOF_FIXTURES, SOUND_FIXTURES

ROOT = FIXTURES.parent
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"

GOLDEN: dict[str, list[str]] = {
    "check_loop_invariance": ["check", "fixtures/loop_invariance.proof"],
    "check_unsound_cut": ["check", "fixtures/unsound_cut.proof"],
    "check_atomic_k": ["check", "--atomic-k", "fixtures/loop_invariance.proof"],
    "equiv_pi": ["equiv", "--ccs", "fixtures/pi.ccs", "P1", "P2"],
    "equiv_distinct": ["equiv", "a", "b"],
    "included_counterexample": ["included", "a", "a+b"],
    "prove_ax": ["prove", "p, ~p"],
    "prove_fails": ["prove", "p & ~p"],
    "prove_exhausted": ["prove", "--budget", "3", "[(a+b)*]p, <a*>~p"],
    "prove_equiv_pi": ["prove-equiv", "--ccs", "fixtures/pi.ccs", "P1", "P2"],
    "prove_equiv_distinct": ["prove-equiv", "a", "b"],
    "countermodel_p": ["countermodel", "p"],
    "mc_chain": ["mc", "--frame", "fixtures/chain.json", "[a][a]p"],
    "lts_dot": ["lts", "--dot", "a;b"],
    "traces": ["traces", "--depth", "2", "a;(b+c)"],
    "cutelim_unsound": ["cutelim", "fixtures/unsound_cut.proof"],
    "template_a_empty": ["template", "A-empty", "phi=p"],
    "parse_formula": ["parse", "formula", "[a*]p -> q"],
}


def golden_text(argv: list[str], out: str, code: int) -> str:
    return f"$ opdl {' '.join(argv)}\n{out}[exit {code}]\n"


@pytest.fixture(autouse=True)
def _at_root(monkeypatch):
    monkeypatch.chdir(ROOT)


def run(capsys, *argv: str) -> tuple[str, int]:
    code = main(list(argv))
    return capsys.readouterr().out, code


class TestExamples:
    def test_check_loop_invariance(self, capsys):
        out, code = run(capsys, "check", "fixtures/loop_invariance.proof")
        assert out.splitlines() == ["local: ok", "progress: ok"] and code == 0

    def test_equiv_pi(self, capsys):
        out, code = run(capsys, "equiv", "--ccs", "fixtures/pi.ccs", "P1", "P2")
        assert out.strip() == "equivalent" and code == 0

    def test_unsound_cut(self, capsys):
        out, code = run(capsys, "check", "fixtures/unsound_cut.proof")
        assert "progress: FAIL (lasso: n0→n0)" in out and code == 1


class TestExitCodes:
    @pytest.mark.parametrize("name", SOUND_FIXTURES)
    def test_sound_fixtures_check(self, capsys, name):
        out, code = run(capsys, "check", "--ccs", "fixtures/pi.ccs", f"fixtures/{name}")
        assert code == 0 and "progress: ok" in out

    @pytest.mark.parametrize("name", PROOF_FIXTURES)
    def test_render_round_trips(self, capsys, name):
        out, code = run(capsys, "render", f"fixtures/{name}")
        assert code == 0
        again, _ = run(capsys, "render", out)
        assert again == out

    def test_parse_error_is_usage(self, capsys):
        assert main(["parse", "formula", "(p"]) == 2
        assert "parse error" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_missing_binding(self, capsys):
        assert main(["template", "LI", "phi=p"]) == 2

    def test_unbound_foreign_name(self, capsys):
        assert main(["check", "fixtures/pi_equiv.proof"]) == 2
        assert "no definition for P1" in capsys.readouterr().err

    def test_mc_needs_frame(self, capsys):
        assert main(["mc", "p"]) == 2

    def test_lts_truncation(self, capsys):
        out, code = run(capsys, "lts", "--ccs", "fixtures/pi.ccs", "--max-states", "1", "P1")
        assert code == 3 and "truncated" in out

    def test_cutelim_fuel(self, capsys):
        out, code = run(capsys, "cutelim", "--fuel", "1", "fixtures/unsound_cut.proof")
        assert code == 3 and "fuel exhausted" in out

    def test_countermodel_is_reparseable(self, capsys, tmp_path):
        out, code = run(capsys, "countermodel", "[a]p -> p")
        assert code == 1
        frame = out.split("\n", 1)[1]
        assert json.loads(frame)["worlds"] == 1
        (tmp_path / "f.json").write_text(frame)
        _, code = run(capsys, "mc", "--frame", str(tmp_path / "f.json"), "[a]p -> p")
        assert code == 1

    def test_distinguishing_trace_is_reparseable(self, capsys):
        out, code = run(capsys, "included", "a;b", "a;c")
        assert code == 1
        trace = out.split(": ", 1)[1].strip()
        _, code = run(capsys, "included", trace, "a;c")
        assert code == 0

    def test_prove_output_rechecks(self, capsys, tmp_path):
        out, code = run(capsys, "prove", "<a*>~p, [a;a*]p")
        assert code == 0
        proof = out.split("\n", 1)[1]
        (tmp_path / "g.proof").write_text(proof)
        out, code = run(capsys, "check", str(tmp_path / "g.proof"))
        assert code == 0


class TestGolden:
    @pytest.mark.parametrize("name", sorted(GOLDEN))
    def test_golden(self, capsys, name):
        argv = GOLDEN[name]
        out, code = run(capsys, *argv)
        assert golden_text(argv, out, code) == (GOLDEN_DIR / f"{name}.txt").read_text()

    def test_stable_under_repetition(self, capsys):
        first = run(capsys, "countermodel", "--seed", "3", "[a*]p -> p")
        assert run(capsys, "countermodel", "--seed", "3", "[a*]p -> p") == first
