import numpy as np
import pytest
from hypothesis import strategies as st

from coupled_waves import CoefficientField, Grid1D, build_generator


def bump(c, w, h):
    return lambda x: h * np.exp(-(((x - c) / w) ** 2))


@pytest.fixture(scope="session")
def overlap():
    """Overlapping coupling and damping bumps on (0, pi), n = 63."""
    grid = Grid1D(np.pi, 63)
    coeffs = CoefficientField.from_functions(grid, bump(1.3, 0.8, 1.0), bump(1.9, 0.8, 1.0))
    return build_generator(grid, coeffs)


@st.composite
def scenarios(draw, n_max=40):
    """Random grid plus nonnegative alpha, beta and g >= a > 0 sampled directly."""
    n = draw(st.integers(3, n_max))
    length = draw(st.floats(0.5, 10.0))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    grid = Grid1D(length, n)
    alpha = rng.uniform(0, 3, n) * (rng.random(n) < 0.7)
    beta = rng.uniform(0, 3, n) * (rng.random(n) < 0.7)
    g = rng.uniform(0.2, 4.0, n + 1)
    return grid, CoefficientField(alpha, beta, g), rng


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
