import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_waves import CoefficientField, Grid1D, InputError, build_generator
from coupled_waves import counterexample as ce, frequency as fq

from conftest import scenarios


def free_generator(n=31, L=np.pi):
    grid = Grid1D(L, n)
    return build_generator(grid, CoefficientField.from_functions(grid, 0.0, 0.0))


def test_free_spectrum_is_discrete_laplacian():
    A = free_generator()
    h = A.grid.h
    k = np.arange(1, A.grid.n + 1)
    omega = 2 / h * np.sin(k * h / 2)  # L = pi: discrete Dirichlet frequencies
    ev = fq.eigenvalues(A)
    assert np.abs(ev.real).max() < 1e-10
    expected = np.sort(np.r_[omega, omega, -omega, -omega])
    assert np.allclose(np.sort(ev.imag), expected, rtol=1e-10)


def test_sorted_with_conjugates_adjacent(overlap):
    sp = fq.spectrum(overlap)
    v = sp.values
    assert np.all(np.diff(np.abs(v.imag)) >= -1e-9)
    assert np.allclose(v[0::2], np.conj(v[1::2]))
    assert sp.residuals.max() < fq.eig_tolerance(overlap)


@settings(max_examples=15, deadline=None)
@given(scenarios(n_max=20))
def test_dissipative_spectrum(sc):
    grid, c, _ = sc
    A = build_generator(grid, c)
    assert fq.eigenvalues(A).real.max() <= fq.eig_tolerance(A)


def test_shift_invert_matches_dense(overlap):
    dense = fq.spectrum(overlap)
    near = fq.spectrum(overlap, targets=[5j], k=4)
    for lam in near.values:
        assert abs(dense.closest(lam) - lam) < 1e-9
    assert near.residuals.max() < 1e-8


def test_counterexample_witness_near_5i():
    g = ce.grid(199)
    A = build_generator(g, ce.coefficients(g))
    lam = fq.spectrum(A, targets=[5j], k=2).closest(5j)
    assert abs(lam - 5j) < max(5e-2, 10 * g.h)


def test_region_fit_threshold_semantics():
    eigs = np.array([-0.1 + 3j, -0.1 - 3j, -2 + 0.5j, -2 - 0.5j])
    fit = fq.fit_spectral_region(eigs)
    assert fit.feasible and not fit.inconclusive
    assert fit.holds(fit.C_region * (1 + 1e-9))
    assert fit.holds(10 * fit.C_region)
    assert not fit.holds(fit.C_region * 0.9)
    # threshold solves exp(-C |Im|) / C = |Re| for the critical eigenvalue
    C = fit.C_region
    assert np.exp(-C * 3) / C == pytest.approx(0.1, rel=1e-10)


def test_region_fit_flags_imaginary_and_unstable():
    assert not fq.fit_spectral_region([-1.0 + 1j, 0.0 + 5j]).feasible
    assert fq.fit_spectral_region([1e-3 + 1j, -1 + 2j]).unstable.size == 1
    fit = fq.fit_spectral_region([5j, -5j])
    assert fit.inconclusive and not fit.feasible and np.isinf(fit.C_region)
    with pytest.raises(InputError):
        fq.fit_spectral_region([])


@settings(max_examples=50)
@given(st.floats(1e-6, 10.0), st.floats(0.0, 50.0))
def test_region_threshold_is_tight(a, b):
    lam = complex(-a, b)
    C = fq._region_threshold(lam)
    assert C > 0
    assert np.exp(-C * b) / C == pytest.approx(a, rel=1e-8)


def test_resolvent_normal_case_is_inverse_distance():
    # beta = 0: B is skew, hence normal, so the norm is 1 / dist(gamma, spectrum)
    A = free_generator(n=15)
    ev = fq.eigenvalues(A)
    for gamma in (0.3 + 2.2j, 1.0 + 0.0j, 0.05 + 7.1j):
        expected = 1 / np.abs(ev - gamma).min()
        assert fq.resolvent_norm(A, gamma, "dense") == pytest.approx(expected, rel=1e-10)
        assert fq.resolvent_norm(A, gamma, "sparse") == pytest.approx(expected, rel=1e-8)


def test_dense_and_sparse_agree(overlap):
    for s in (1.7, 4.2, 9.9):
        d = fq.resolvent_norm(overlap, 1j * s, "dense")
        p = fq.resolvent_norm(overlap, 1j * s, "sparse")
        assert p == pytest.approx(d, rel=1e-8)


def test_at_spectrum_raises():
    A = free_generator(n=15)
    lam = fq.eigenvalues(A)[0]
    with pytest.raises(fq.AtSpectrumError):
        fq.resolvent_norm(A, lam, "dense")


def test_hille_yosida(overlap):
    for g in (0.1 + 2j, 1.0 + 0j, 3 + 10j):
        assert fq.hille_yosida_ratio(overlap, g) <= 1 + 1e-10
    with pytest.raises(InputError):
        fq.hille_yosida_ratio(overlap, 0.0 + 1j)


def test_sweep_range_checks(overlap):
    for lo, hi in ((0.5, 3.0), (3.0, 3.0), (4.0, 2.0)):
        with pytest.raises(InputError):
            fq.resolvent_sweep(overlap, lo, hi, 10)


def test_sweep_constant_and_determinism(overlap, monkeypatch):
    r1 = fq.resolvent_sweep(overlap, 1.5, 12.0, 40)
    monkeypatch.setenv("COUPLED_WAVE_THREADS", "3")
    r2 = fq.resolvent_sweep(overlap, 1.5, 12.0, 40)
    assert np.array_equal(r1.sigmas, r2.sigmas) and np.array_equal(r1.norms, r2.norms)
    s, v = r1.sigmas, r1.norms
    assert np.all(v <= r1.C_res * np.exp(r1.C_res * s) * (1 + 1e-12))
    assert r1.C_res == pytest.approx(max(fq.exponential_constant(a, b) for a, b in zip(s, v)))
    assert s.size > 40  # refined peaks were added


def test_sweep_locks_onto_least_damped_mode():
    g = ce.grid(99)
    A = build_generator(g, ce.coefficients(g))
    r = fq.resolvent_sweep(A, 1.5, 8.0, 30)
    s, v = r.peak()
    ev = fq.eigenvalues(A)
    band = ev[(ev.imag > 1.5) & (ev.imag < 8.0)]
    lam = band[np.argmax(band.real)]  # least damped mode in the band
    assert s == pytest.approx(lam.imag, abs=1e-6)
    assert v == pytest.approx(1 / abs(lam.real), rel=0.05)


def test_worker_count(monkeypatch):
    monkeypatch.delenv("COUPLED_WAVE_THREADS", raising=False)
    assert fq.worker_count() == 1
    assert fq.worker_count(4) == 4
    monkeypatch.setenv("COUPLED_WAVE_THREADS", "x")
    with pytest.raises(InputError):
        fq.worker_count()


def test_csv_writers(tmp_path, overlap):
    sw = fq.resolvent_sweep(overlap, 2.0, 3.0, 3, refine_peaks=False)
    fq.write_sweep_csv(tmp_path / "s.csv", sw)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "sigma,resolvent_norm,log_norm,flag" and len(lines) == 4
    fq.write_spectrum_csv(tmp_path / "e.csv", fq.spectrum(overlap))
    assert (tmp_path / "e.csv").read_text().startswith("re,im,residual\n")
