from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from opdl.frontend import parse_ccs, parse_proof
from opdl.opsem import OpSemRegistry, default_registry

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fixture_registry() -> OpSemRegistry:
    """Registry with the CCS definitions every foreign fixture refers to."""
    return default_registry(parse_ccs((FIXTURES / "pi.ccs").read_text())[0])


def load_proof(name: str):
    return parse_proof((FIXTURES / name).read_text())


PROOF_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.proof"))
SOUND_FIXTURES = [n for n in PROOF_FIXTURES if n != "unsound_cut.proof"]


@pytest.fixture
def reg() -> OpSemRegistry:
    return fixture_registry()


def rule_sound_on(frame, concl, prems, reg, pointwise: bool) -> bool:
    """Premise truth implies conclusion truth, worldwise or as frame validity."""
    from opdl.kripke import Evaluator, eval_sequent

    ev = Evaluator(frame, reg)
    c = eval_sequent(ev, concl)
    ps = [eval_sequent(ev, p) for p in prems]
    if pointwise:
        return all(bool(c[w]) for w in range(frame.n) if all(p[w] for p in ps))
    return not all(p.all() for p in ps) or bool(c.all())
