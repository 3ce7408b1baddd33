"""Implicit-midpoint time stepping of ``U' = A U`` and log-decay fitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import core
from .core import CoefficientField, EnergyReport, Grid1D, InputError, StateLike, as_array
from .discretization import GeneratorMatrix, build_generator


class LinearSolveError(RuntimeError):
    """The midpoint system ``(I - dt/2 A)`` could not be factorized or solved."""


@dataclass
class SimulationConfig:
    grid: Grid1D
    coeffs: CoefficientField
    U0: StateLike
    dt: float
    T: float
    stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise InputError(f"need T >= dt, got T = {self.T}, dt = {self.dt}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise InputError("stride must be a positive integer")


class MidpointStepper:
    """Factorizes ``I - dt/2 A`` once; every step is one sparse triangular solve pair."""

    def __init__(self, A: GeneratorMatrix, dt: float):
        if dt == 0 or not np.isfinite(dt):
            raise InputError("dt must be finite and nonzero")
        self.A = A
        self.dt = float(dt)
        N = A.size
        I = sp.identity(N, format="csc")
        M = A.matrix.tocsc()
        self.rhs = (I + 0.5 * dt * M).tocsr()
        try:
            self.lu = spla.splu((I - 0.5 * dt * M).tocsc())
        except RuntimeError as exc:
            raise LinearSolveError(f"LU of I - dt/2 A failed for dt = {dt}, size {N}: {exc}") from exc
        diag_u = np.abs(self.lu.U.diagonal())
        self.min_pivot = float(diag_u.min())
        if not self.min_pivot > 0:
            raise LinearSolveError(f"zero pivot in I - dt/2 A (dt = {dt}, min |U_ii| = {self.min_pivot:.3e})")

    def __call__(self, U: np.ndarray) -> np.ndarray:
        b = self.rhs @ U
        out = self.lu.solve(b)
        if not np.all(np.isfinite(out)):
            raise LinearSolveError(f"non-finite midpoint solution (min pivot {self.min_pivot:.3e})")
        return out


@lru_cache(maxsize=16)
def _stepper(A: GeneratorMatrix, dt: float) -> MidpointStepper:
    return MidpointStepper(A, dt)


def step_midpoint(U: StateLike, A: GeneratorMatrix, dt: float) -> np.ndarray:
    """One implicit-midpoint step: solve ``(I - dt/2 A) U+ = (I + dt/2 A) U``.

    Negative ``dt`` steps backwards; with ``beta = 0`` a step of ``+dt``
    followed by ``-dt`` returns the input to round-off.
    """
    arr = as_array(U, A.grid.n)
    return _stepper(A, float(dt))(arr)


def step_count(T: float, dt: float) -> int:
    """Number of steps of size ``dt`` needed to reach ``T`` (rounded up)."""
    return int(np.ceil(T / dt - 1e-9))


def integrate(A: GeneratorMatrix, U0: StateLike, dt: float, nsteps: int, stride: int = 1) -> Iterator[tuple[float, np.ndarray, float]]:
    """Yield ``(t, U, dissipated)`` at step 0 and every ``stride`` steps.

    ``dissipated`` accumulates ``dt * D((U_k + U_{k+1}) / 2)``, the exact
    energy loss of the midpoint rule, so ``E(0) - E(t) - dissipated``
    is zero up to round-off.
    """
    stepper = _stepper(A, float(dt))
    U = as_array(U0, A.grid.n).astype(float, copy=True)
    n = A.grid.n
    h = A.grid.h
    beta = A.coeffs.beta
    damped = bool(np.any(beta > 0))
    lost = 0.0
    yield 0.0, U, lost
    for k in range(1, nsteps + 1):
        new = stepper(U)
        if damped:
            mid_u = 0.5 * (U[n : 2 * n] + new[n : 2 * n])
            lost += dt * h * float(np.dot(beta, mid_u * mid_u))
        U = new
        if k % stride == 0 or k == nsteps:
            yield k * dt, U, lost


def simulate(cfg: SimulationConfig, A: GeneratorMatrix | None = None) -> list[EnergyReport]:
    """Integrate the configuration and return one :class:`EnergyReport` per sample."""
    if A is None:
        A = build_generator(cfg.grid, cfg.coeffs)
    nsteps = step_count(cfg.T, cfg.dt)
    return [
        core.energy_report(U, A, t, lost)
        for t, U, lost in integrate(A, cfg.U0, cfg.dt, nsteps, cfg.stride)
    ]


def energy_budget_defect(reports: Sequence[EnergyReport]) -> float:
    """``max_k |E(0) - E(t_k) - dissipated_k| / E(0)`` (0 for zero data)."""
    E0 = reports[0].E
    if E0 == 0:
        return 0.0
    return max(abs(E0 - r.E - r.dissipated) for r in reports) / E0


def monotonicity_violation(reports: Sequence[EnergyReport]) -> float:
    """Largest relative energy increase between consecutive samples."""
    E = np.array([r.E for r in reports])
    if E[0] == 0:
        return 0.0
    return float(max(0.0, np.max(np.diff(E), initial=0.0)) / E[0])


@dataclass
class DecayFit:
    """Empirical constant in ``E(t) <= C / ln(t + 2) * ||U0||_graph^2``.

    ``profile[k] = E(t_k) ln(t_k + 2) / ||U0||_graph^2`` and ``running`` is
    its cumulative maximum; ``C_log = running[-1]``.
    """

    C_log: float
    times: np.ndarray
    profile: np.ndarray
    running: np.ndarray
    feasible: bool = True

    def growth_over_last_decade(self) -> float:
        """``C(T) / C(T/10) - 1`` for the running constant."""
        T = self.times[-1]
        idx = np.searchsorted(self.times, T / 10.0, side="right") - 1
        earlier = self.running[max(idx, 0)]
        if earlier == 0:
            return 0.0 if self.C_log == 0 else np.inf
        return float(self.C_log / earlier - 1.0)

    @property
    def saturated(self) -> bool:
        """True when the running constant has levelled off (< 5% growth in the last decade)."""
        return self.growth_over_last_decade() < 0.05

    def log_law_fit(self, t_min: float = 1.0) -> tuple[float, float]:
        """Least-squares fit ``running ~ c ln(t + 2)`` on ``t >= t_min``.

        Returns ``(c, max relative deviation)``.
        """
        mask = self.times >= t_min
        ln = np.log(self.times[mask] + 2.0)
        r = self.running[mask]
        if not np.any(mask) or not np.any(r):
            raise InputError("no nonzero samples beyond t_min for the ln-law fit")
        c = float(np.dot(ln, r) / np.dot(ln, ln))
        dev = float(np.max(np.abs(r - c * ln) / (c * ln)))
        return c, dev


def fit_log_decay(reports: Sequence[EnergyReport], graph_norm0_sq: float) -> DecayFit:
    """Smallest ``C`` with ``E(t_k) <= C / ln(t_k + 2) * graph_norm0_sq`` at every sample."""
    if not reports:
        raise InputError("need at least one energy report")
    if not graph_norm0_sq > 0:
        raise InputError("initial graph norm must be positive")
    t = np.array([r.t for r in reports])
    E = np.array([r.E for r in reports])
    profile = E * np.log(t + 2.0) / graph_norm0_sq
    running = np.maximum.accumulate(profile)
    return DecayFit(float(running[-1]), t, profile, running)


def fit_exponential_rate(reports: Sequence[EnergyReport], t_min: float = 0.0) -> float:
    """Slope of a least-squares line through ``log E(t)`` for ``t >= t_min``."""
    t = np.array([r.t for r in reports])
    E = np.array([r.E for r in reports])
    mask = (t >= t_min) & (E > 0)
    if mask.sum() < 2:
        raise InputError("need two positive-energy samples to fit a rate")
    slope, _ = np.polyfit(t[mask], np.log(E[mask]), 1)
    return float(slope)


CSV_HEADER = ["t", "E", "D", "H_norm_sq", "C_log_running"]


def write_reports_csv(path, reports: Sequence[EnergyReport], graph_norm0_sq: float) -> None:
    """One row per sample; ``C_log_running`` is written as 0 for zero initial data."""
    running = fit_log_decay(reports, graph_norm0_sq).running if graph_norm0_sq > 0 else None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for k, r in enumerate(reports):
            c = f"{running[k]:.17g}" if running is not None else f"{0.0:.17g}"
            w.writerow([f"{r.t:.17g}", f"{r.E:.17g}", f"{r.D:.17g}", f"{r.H_norm_sq:.17g}", c])
