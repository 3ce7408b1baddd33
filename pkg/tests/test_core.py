import numpy as np
import pytest
from hypothesis import given, settings

from coupled_waves import CoefficientField, Grid1D, InputError, StateVector, build_generator
from coupled_waves import core
from coupled_waves.core import piecewise_constant

from conftest import scenarios


def test_grid_spacing_and_nodes():
    g = Grid1D(2 * np.pi, 9)
    assert g.h * (g.n + 1) == pytest.approx(2 * np.pi, rel=1e-15)
    assert g.nodes[4] == pytest.approx(np.pi, rel=1e-15)
    assert g.midpoints.size == 10
    r = g.refined()
    assert r.n == 19 and np.allclose(r.nodes[1::2], g.nodes)


@pytest.mark.parametrize("length,n", [(0.0, 5), (-1.0, 5), (1.0, 2), (1.0, 3.5)])
def test_grid_rejects_bad_input(length, n):
    with pytest.raises(InputError):
        Grid1D(length, n)


def test_coefficients_validate():
    n = 5
    with pytest.raises(InputError):
        CoefficientField(-np.ones(n), np.ones(n), np.ones(n + 1))
    with pytest.raises(InputError):
        CoefficientField(np.ones(n), np.ones(n), np.r_[np.ones(n), 0.0])
    with pytest.raises(InputError):
        CoefficientField(np.ones(n), np.ones(n), np.ones(n + 1), ellipticity=2.0)
    with pytest.raises(InputError):
        CoefficientField(np.ones(n), np.ones(n), np.ones(n))
    c = CoefficientField(np.zeros(n), np.ones(n), 2 * np.ones(n + 1))
    assert c.ellipticity == 2.0
    assert not c.has_coupling and c.has_damping
    with pytest.raises(InputError):
        c.check_nontrivial()
    with pytest.raises(ValueError):
        c.alpha[0] = 1.0


def test_piecewise_takes_left_value_on_jump():
    f = piecewise_constant([1.0], [3.0, 5.0])
    assert f(np.array([0.5, 1.0, 1.5])).tolist() == [3.0, 3.0, 5.0]


def test_zero_state_has_zero_energy():
    grid = Grid1D(1.0, 7)
    c = CoefficientField.from_functions(grid, 1.0, 1.0)
    Z = StateVector.zeros(7)
    assert core.energy(Z, grid, c) == 0.0
    assert core.dissipation(Z, grid, c) == 0.0


def test_energy_of_sine_mode_matches_hand_value():
    # y = sin(pi x / L): forward-difference energy h * sum(((y_{i+1} - y_i)/h)^2)
    L, n = 1.0, 31
    grid = Grid1D(L, n)
    c = CoefficientField.from_functions(grid, 0.0, 0.0)
    y = np.sin(np.pi * grid.nodes / L)
    lam_h = 4 / grid.h**2 * np.sin(np.pi * grid.h / (2 * L)) ** 2  # discrete Dirichlet eigenvalue
    expected = 0.5 * lam_h * grid.h * np.sum(y**2)
    U = StateVector(y, 0 * y, 0 * y, 0 * y)
    assert core.energy(U, grid, c) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(scenarios())
def test_inner_product_is_hermitian_and_matches_gram(sc):
    grid, c, rng = sc
    n = grid.n
    U = rng.standard_normal(4 * n) + 1j * rng.standard_normal(4 * n)
    V = rng.standard_normal(4 * n) + 1j * rng.standard_normal(4 * n)
    a = core.inner_h(U, V, grid, c)
    b = core.inner_h(V, U, grid, c)
    assert a == pytest.approx(np.conj(b), rel=1e-12)
    A = build_generator(grid, c)
    W = A.energy_factor
    assert a == pytest.approx(np.vdot(W @ V, W @ U), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(scenarios())
def test_dissipation_identity(sc):
    grid, c, rng = sc
    n = grid.n
    A = build_generator(grid, c)
    U = rng.standard_normal(4 * n)
    lhs = np.real(core.inner_h(A.matrix @ U, U, grid, c))
    rhs = -core.dissipation(U, grid, c)
    scale = core.norm_h_sq(A.matrix @ U, grid, c) ** 0.5 * core.norm_h_sq(U, grid, c) ** 0.5
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_energy_report_fields():
    grid = Grid1D(1.0, 9)
    c = CoefficientField.from_functions(grid, 1.0, 2.0)
    A = build_generator(grid, c)
    U = np.linspace(0, 1, 36)
    r = core.energy_report(U, A, t=1.5, dissipated=0.25)
    assert r.E == pytest.approx(0.5 * r.H_norm_sq)
    assert r.graph_norm_sq == pytest.approx(core.graph_norm_sq(U, A))
    assert r.D == pytest.approx(core.dissipation(U, grid, c))
    assert (r.t, r.dissipated) == (1.5, 0.25)


def test_state_vector_roundtrip_and_shape_checks():
    s = StateVector(*np.arange(12.0).reshape(4, 3))
    assert np.array_equal(StateVector.from_array(s.to_array()).to_array(), s.to_array())
    with pytest.raises(InputError):
        StateVector(np.ones(3), np.ones(2), np.ones(3), np.ones(3))
    with pytest.raises(InputError):
        core.as_array(np.ones(10))
    with pytest.raises(InputError):
        core.as_array(np.ones(12), n=4)
