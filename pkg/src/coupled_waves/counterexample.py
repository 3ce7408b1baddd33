"""Exact time-periodic solution of the coupled system with disjoint coupling
and damping regions on ``(0, 2*pi)``.

Coefficients: ``alpha = 24/5`` on ``(0, pi)``, ``beta = 1`` on ``(pi, 2*pi)``,
``g = 1``.  The solution

    y = sin(5t) (7 sin x - sin 7x)          on (0, pi),   0 on [pi, 2 pi)
    z = -cos(5t) (7 sin x + sin 7x)         on (0, pi),
        -(14/5) cos(5t) sin 5x              on [pi, 2 pi)

never feels the damping (``y_t = 0`` wherever ``beta > 0``), so its energy
``386 pi`` is conserved and the generator has the eigenvalues ``+-5i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CoefficientField, Grid1D, InputError, StateVector, energy_report, piecewise_constant
from .discretization import build_generator
from . import timedomain

LENGTH = 2 * np.pi
INTERFACE = np.pi
ALPHA_VALUE = 24.0 / 5.0
BETA_VALUE = 1.0
FREQUENCY = 5.0
# 1/2 (625 + 49 + 98) pi, see tests/test_counterexample.py for the quadrature oracle
EXACT_ENERGY = 386.0 * np.pi

alpha = piecewise_constant([INTERFACE], [ALPHA_VALUE, 0.0])
beta = piecewise_constant([INTERFACE], [0.0, BETA_VALUE])


def grid(n: int) -> Grid1D:
    """Grid on ``(0, 2 pi)`` with a node exactly on the interface ``x = pi``."""
    if (n + 1) % 2:
        raise InputError(f"n + 1 must be even so that x = pi is a node, got n = {n}")
    return Grid1D(LENGTH, n)


def coefficients(grid: Grid1D) -> CoefficientField:
    if not np.isclose(grid.length, LENGTH):
        raise InputError("the closed-form example lives on (0, 2 pi)")
    return CoefficientField.from_functions(grid, alpha, beta, 1.0)


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > LENGTH):
        raise InputError("x must lie in [0, 2 pi]")
    return x


def eval(t, x):
    """Return ``(y, y_t, z, z_t)`` of the closed-form solution at ``(t, x)``."""
    x = _check_domain(x)
    t = np.asarray(t, dtype=float)
    left = x < INTERFACE
    s5, c5 = np.sin(5 * t), np.cos(5 * t)
    p = 7 * np.sin(x) - np.sin(7 * x)
    q = 7 * np.sin(x) + np.sin(7 * x)
    r = np.sin(5 * x)
    y = np.where(left, s5 * p, 0.0)
    y_t = np.where(left, 5 * c5 * p, 0.0)
    z = np.where(left, -c5 * q, -2.8 * c5 * r)
    z_t = np.where(left, 5 * s5 * q, 14 * s5 * r)
    return y, y_t, z, z_t


def space_derivatives(t, x, side: str = "left"):
    """First and second ``x``-derivatives ``(y_x, y_xx, z_x, z_xx)``.

    ``side`` picks the formula branch, which gives one-sided values at the
    interface: ``"left"`` uses the ``(0, pi)`` expressions, ``"right"`` the
    ``(pi, 2 pi)`` ones, ``"auto"`` whichever branch contains ``x``.
    """
    x = _check_domain(x)
    t = np.asarray(t, dtype=float)
    if side == "auto":
        left = x < INTERFACE
    elif side in ("left", "right"):
        left = np.full(np.shape(x), side == "left")
    else:
        raise InputError(f"unknown side {side!r}")
    s5, c5 = np.sin(5 * t), np.cos(5 * t)
    y_x = np.where(left, s5 * (7 * np.cos(x) - 7 * np.cos(7 * x)), 0.0)
    y_xx = np.where(left, s5 * (-7 * np.sin(x) + 49 * np.sin(7 * x)), 0.0)
    z_x = np.where(left, -c5 * (7 * np.cos(x) + 7 * np.cos(7 * x)), -14 * c5 * np.cos(5 * x))
    z_xx = np.where(left, c5 * (7 * np.sin(x) + 49 * np.sin(7 * x)), 70 * c5 * np.sin(5 * x))
    return y_x, y_xx, z_x, z_xx


def time_second_derivatives(t, x):
    """``(y_tt, z_tt)`` of the closed form."""
    x = _check_domain(x)
    left = x < INTERFACE
    s5, c5 = np.sin(5 * t), np.cos(5 * t)
    y_tt = np.where(left, -25 * s5 * (7 * np.sin(x) - np.sin(7 * x)), 0.0)
    z_tt = np.where(left, 25 * c5 * (7 * np.sin(x) + np.sin(7 * x)), 70 * c5 * np.sin(5 * x))
    return y_tt, z_tt


def residual(t, x, eps: float = 1e-9):
    """PDE residuals ``(r_y, r_z)`` of the closed form at smooth points.

    Points within ``eps`` of ``0``, ``pi`` or ``2 pi`` are rejected: the
    coefficients jump at ``pi`` and the boundary is not an interior point.
    """
    x = _check_domain(x)
    dist = np.min(np.abs(np.subtract.outer(x, [0.0, INTERFACE, LENGTH])), axis=-1)
    if np.any(dist <= eps):
        raise InputError("residual requested within eps of the interface or boundary")
    _, y_t, _, z_t = eval(t, x)
    _, y_xx, _, z_xx = space_derivatives(t, x, side="auto")
    y_tt, z_tt = time_second_derivatives(t, x)
    a, b = alpha(x), beta(x)
    r_y = y_tt - y_xx + a * z_t + b * y_t
    r_z = z_tt - z_xx - a * y_t
    return r_y, r_z


def literal_initial_data(x):
    """Variant of the initial data whose velocity is ``y^1 = 7 sin x - sin 7x``.

    This lacks the factor 5 that the closed form ``y = sin(5t)(...)``
    produces, so it is *not* ``eval(0, x)``; it is kept for an energy
    cross-check only (continuum energy ``86 pi``).
    """
    x = _check_domain(x)
    left = x < INTERFACE
    y0 = np.zeros_like(x)
    y1 = np.where(left, 7 * np.sin(x) - np.sin(7 * x), 0.0)
    z0 = np.where(left, -7 * np.sin(x) - np.sin(7 * x), -2.8 * np.sin(5 * x))
    z1 = np.zeros_like(x)
    return y0, y1, z0, z1


def state(grid: Grid1D, t: float = 0.0) -> StateVector:
    """Nodal samples of the closed form at time ``t``."""
    return StateVector(*eval(t, grid.nodes))


@dataclass
class ComparisonReport:
    """Simulation versus closed form at the sample times."""

    n: int
    h: float
    dt: float
    times: np.ndarray
    rel_errors: np.ndarray  # max-norm error over all four components / max-norm of exact state
    energies: np.ndarray
    dissipation: np.ndarray
    rows: list = field(default_factory=list, repr=False)

    @property
    def max_rel_error(self) -> float:
        return float(self.rel_errors.max())

    @property
    def energy_drift(self) -> float:
        """``max_k |E(t_k) - E(0)| / E(0)``."""
        return float(np.max(np.abs(self.energies - self.energies[0])) / self.energies[0])

    @property
    def max_dissipation(self) -> float:
        return float(self.dissipation.max())


def compare_with_simulation(grid: Grid1D, dt: float, T: float, stride: int | None = None, keep_rows: bool = False) -> ComparisonReport:
    """Run the implicit-midpoint simulator from the nodal closed form and
    compare with the exact solution at every ``stride``-th step.

    The grid's counterpart of the ``+-5i`` pair has real part of order
    ``h^4`` rather than exactly zero, so the discrete energy drifts by
    ``O(h^4 T)``.

    ``keep_rows`` stores ``(t, x, y_exact, y_sim, z_exact, z_sim, abs_err)``
    tuples for CSV export.
    """
    if (grid.n + 1) % 2:
        raise InputError("grid must have a node at x = pi")
    coeffs = coefficients(grid)
    A = build_generator(grid, coeffs)
    nsteps = timedomain.step_count(T, dt)
    if stride is None:
        stride = max(1, nsteps // 20)
    x = grid.nodes
    n = grid.n
    times, errs, energies, diss, rows = [], [], [], [], []
    for t, U, _ in timedomain.integrate(A, state(grid).to_array(), dt, nsteps, stride):
        exact = np.concatenate(eval(t, x))
        diff = np.abs(U - exact)
        times.append(t)
        errs.append(diff.max() / np.abs(exact).max())
        rep = energy_report(U, A, t)
        energies.append(rep.E)
        diss.append(rep.D)
        if keep_rows:
            ye, ze = exact[:n], exact[2 * n : 3 * n]
            ys, zs = U[:n], U[2 * n : 3 * n]
            err = np.maximum(np.abs(ys - ye), np.abs(zs - ze))
            rows.extend(zip(np.full(n, t), x, ye, ys, ze, zs, err))
    return ComparisonReport(
        n=n,
        h=grid.h,
        dt=dt,
        times=np.array(times),
        rel_errors=np.array(errs),
        energies=np.array(energies),
        dissipation=np.array(diss),
        rows=rows,
    )
