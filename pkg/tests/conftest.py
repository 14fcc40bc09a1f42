import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from so3align.scenario import preset
from so3align.sim import run

settings.register_profile(
    "default", deadline=None, max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one ``AC<n> ... PASS/FAIL`` line, echoed in the terminal summary."""

    def record(label: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{label:<44} {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_RUNS = {}


def preset_run(name):
    """Run a preset once per session (runs are deterministic)."""
    if name not in _RUNS:
        config = preset(name)
        _RUNS[name] = (config, run(config))
    return _RUNS[name]


@pytest.fixture(scope="session")
def fig3_run():
    return preset_run("fig3")


@pytest.fixture(scope="session")
def fig4_run():
    return preset_run("fig4")


@pytest.fixture(scope="session")
def fig5_run():
    return preset_run("fig5")


@pytest.fixture(scope="session")
def fig6_run():
    return preset_run("fig6")
