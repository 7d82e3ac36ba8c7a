import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from askel.monotone import make_run

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_monotone_run(rng: np.random.Generator, n: int, dim: int = 3, noise: float = 1.0):
    """Points advancing along x with transverse noise; the ends realise min and max x."""
    x = np.sort(rng.uniform(0.0, 100.0, n))
    x[0], x[-1] = 0.0, 100.0 + rng.uniform(0.0, 5.0)
    pts = np.column_stack([x] + [rng.normal(0.0, noise, n) for _ in range(dim - 1)])
    return make_run(pts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
