import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roughkit.lift import lift_piecewise_linear
from roughkit.rough_core import GridPath

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_lift(rng, n, m, alpha=0.45, scale=0.3):
    t = np.sort(rng.uniform(0.0, 1.0, n - 1))
    times = np.concatenate([[0.0], t, [1.0]])
    if np.any(np.diff(times) <= 0):
        times = np.linspace(0.0, 1.0, n + 1)
    vals = np.cumsum(rng.standard_normal((n + 1, m)), axis=0) * scale / np.sqrt(n)
    return lift_piecewise_linear(GridPath(times, vals), alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
