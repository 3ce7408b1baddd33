import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_waves import scenario as sc

BASE = """[domain]
length = pi
n = 15

[coefficients]
alpha = bump(1.3, 0.8, 1)
beta = piecewise(1, 2; 0, 2, 0.5)
"""


def test_defaults_and_numbers():
    cfg = sc.parse(BASE)
    assert cfg.length == np.pi and cfg.n == 15
    assert cfg.g == sc.Profile("constant", (1.0,))
    assert sc.number("2*pi/3 - 1") == pytest.approx(2 * np.pi / 3 - 1)
    with pytest.raises(ValueError):
        sc.number("__import__('os')")


def test_profiles_evaluate():
    p = sc.Profile.parse("bump(1, 0.5, 2)")
    assert p(1.0) == 2.0 and p(1.5) == pytest.approx(2 * np.exp(-1))
    q = sc.Profile.parse("piecewise(1, 2; 0, 2, 0.5)")
    assert q(np.array([0.5, 1.0, 1.5, 2.5])).tolist() == [0.0, 0.0, 2.0, 0.5]
    assert sc.Profile.parse("constant(pi)")(0.3) == pytest.approx(np.pi)


def test_roundtrip_idempotent():
    once = sc.serialize(sc.parse(BASE))
    assert sc.serialize(sc.parse(once)) == once
    assert sc.parse(once) == sc.parse(BASE)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.5, 20),
    st.integers(3, 500),
    st.floats(0, 5),
    st.floats(0.01, 3),
    st.integers(0, 10**6),
    st.floats(0.001, 1),
)
def test_roundtrip_random(length, n, height, width, seed, dt):
    cfg = sc.ScenarioConfig(
        length=length,
        n=n,
        alpha=sc.Profile("bump", (length / 2, width, height)),
        beta=sc.Profile("constant", (height,)),
        initial=f"random({seed})",
        dt=dt,
        T=10 * dt,
        omega0=(length / 3, length / 2),
    )
    text = sc.serialize(cfg)
    assert sc.parse(text) == cfg
    assert sc.serialize(sc.parse(text)) == text


@pytest.mark.parametrize(
    "text,line,col",
    [
        ("length = 1\n", 1, 1),
        ("[domain]\nlength = pix\nn = 5\n", 2, 10),
        ("[domain]\nlength = 1\nn = 5\n[coefficients]\nalpha = bump(1, 1, -1)\nbeta = constant(0)\n", 5, 9),
        ("[domain]\nlength = 1\nn = 5\n[coefficients]\nalpha = constant(1)\nbeta = constant(1)\ng = constant(0)\n", 7, 5),
        ("[domain]\nlength = 1\nn = 5\n[coefficients]\nalpha = constant(1)\nbeta = wiggle(1)\n", 6, 8),
        ("[domain]\nlength = 1\nn = 5\nwidth = 3\n", 4, 9),
        ("[domian]\nlength = 1\n", 1, 1),
        # an indented line continues the previous value
        ("[domain]\nlength = 1\n  n = 5\n", 2, 10),
    ],
)
def test_errors_carry_location(text, line, col):
    with pytest.raises(sc.ConfigError) as exc:
        sc.parse(text, source="s.ini")
    assert (exc.value.line, exc.value.column) == (line, col), str(exc.value)
    assert str(exc.value).startswith(f"s.ini:{line}:{col}:")


def test_missing_required_key():
    with pytest.raises(sc.ConfigError, match="beta"):
        sc.parse("[domain]\nlength = 1\nn = 5\n[coefficients]\nalpha = constant(1)\n")


def test_initial_data_kinds():
    cfg = sc.parse(BASE)
    grid = cfg.grid()
    a = sc.random_smooth_state(grid, 3).to_array()
    assert np.array_equal(a, sc.random_smooth_state(grid, 3).to_array())
    assert not np.array_equal(a, sc.random_smooth_state(grid, 4).to_array())
    from dataclasses import replace

    e = replace(cfg, initial="eigenmode(2)").initial_state()
    assert np.abs(e.y).max() == 1.0 and np.all(e.u == 0)
    assert np.sum(np.diff(np.sign(e.y)) != 0) == 1  # second mode has one sign change
    assert not replace(cfg, initial="zero").initial_state().to_array().any()
    with pytest.raises(Exception):
        replace(cfg, initial="counterexample").initial_state()
    with pytest.raises(sc.ConfigError):
        sc.parse(BASE + "[initial]\ndata = eigenmode(0)\n")


def test_refined_keeps_everything_but_n():
    cfg = sc.overlap_scenario(n=31)
    r = cfg.refined()
    assert r.n == 63 and r.alpha == cfg.alpha and r.dt == cfg.dt


def test_shipped_counterexample_matches_module():
    from coupled_waves import counterexample as ce

    cfg = sc.counterexample_scenario(n=99)
    c = cfg.coefficients()
    ref = ce.coefficients(ce.grid(99))
    assert np.array_equal(c.alpha, ref.alpha) and np.array_equal(c.beta, ref.beta)
