import dataclasses
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from platoon_fdi.acceptance import RunCache, run_acceptance  # noqa: E402


def shorten(cfg, horizon=2.0, h=None, sample_period=0.01):
    """Copy of ``cfg`` over a short horizon with a detector window that fits."""
    sim = dataclasses.replace(cfg.sim, horizon=horizon, sample_period=sample_period,
                              h=cfg.sim.h if h is None else h)
    det = dataclasses.replace(cfg.detection, settle=0.0, window=horizon / 4)
    return dataclasses.replace(cfg, sim=sim, detection=det)


@pytest.fixture(scope="session")
def run_cache():
    return RunCache()


@pytest.fixture(scope="session")
def acceptance_results(run_cache):
    return {r.number: r for r in run_acceptance(cache=run_cache)}


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
