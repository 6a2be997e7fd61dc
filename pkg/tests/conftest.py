import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rgquant.simulate import DgpConfig, simulate_observations  # noqa: E402


@pytest.fixture(scope="session")
def sim_small():
    """A 400-day panel from the default DGP with realized quantiles at 0.05 and 0.5."""
    obs, truth = simulate_observations(DgpConfig(n=400, m=100, seed=11), taus=(0.05, 0.5))
    return obs, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
