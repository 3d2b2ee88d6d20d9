import numpy as np
import pytest

from jc_discord.closed_form import ThermalWeights

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture
def record():
    def _record(name, ok, detail=""):
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        return ok
    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=[0.5, 0.75, 1.0], ids=lambda v: f"lambda0={v}")
def weights(request):
    return ThermalWeights.from_lambda0(request.param)
