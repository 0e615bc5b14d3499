from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from igabez.geometry import make_demo_domain, make_demo_domain_3d

settings.register_profile("igabez", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("igabez")

DATA = Path(__file__).resolve().parents[1] / "src" / "igabez" / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def demo():
    return make_demo_domain()


@pytest.fixture(scope="session")
def demo3d():
    return make_demo_domain_3d()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cox_de_boor(knots, p, i, x):
    """Textbook recursion over all functions, 0/0 := 0, last point closed."""
    knots = np.asarray(knots, dtype=float)
    if p == 0:
        if knots[i] <= x < knots[i + 1]:
            return 1.0
        last = np.nonzero(knots < knots[-1])[0][-1]
        return 1.0 if (x == knots[-1] and i == last) else 0.0
    left = right = 0.0
    d1 = knots[i + p] - knots[i]
    d2 = knots[i + p + 1] - knots[i + 1]
    if d1 > 0:
        left = (x - knots[i]) / d1 * cox_de_boor(knots, p - 1, i, x)
    if d2 > 0:
        right = (knots[i + p + 1] - x) / d2 * cox_de_boor(knots, p - 1, i + 1, x)
    return left + right


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
