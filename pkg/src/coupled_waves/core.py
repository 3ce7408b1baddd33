"""Grid, coefficient and state containers plus the discrete energy functionals.

Everything here works on a uniform grid of ``n`` interior nodes over
``(0, L)`` with homogeneous Dirichlet data at both ends.  Node sums are
scaled by ``h`` and the gradient part of the energy uses forward
differences weighted by the midpoint samples of ``g``, so that

    inner_h(U, U) = h * sum(g_mid * |dy|^2) / h^2 + h * sum(|u|^2) + (same for z, v)

is exactly ``U^H G U`` for the block Gram matrix used by the generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np


class InputError(ValueError):
    """Raised when an argument violates a documented precondition."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``n`` interior nodes on ``(0, length)``."""

    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise InputError(f"domain length must be positive, got {self.length}")
        if int(self.n) != self.n or self.n < 3:
            raise InputError(f"need at least 3 interior nodes, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.length / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates ``x_1 .. x_n``."""
        return self.h * np.arange(1, self.n + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """Cell midpoints ``x_{1/2} .. x_{n+1/2}`` (n + 1 values)."""
        return self.h * (np.arange(self.n + 1) + 0.5)

    def refined(self) -> "Grid1D":
        """Grid with the spacing halved; old nodes stay nodes."""
        return Grid1D(self.length, 2 * self.n + 1)


@dataclass(frozen=True)
class CoefficientField:
    """Node samples of the coupling ``alpha`` and damping ``beta`` and
    midpoint samples ``g_mid`` of the elliptic coefficient.

    ``ellipticity`` is the lower bound ``a`` with ``g >= a > 0``; when not
    given it is taken as ``min(g_mid)``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    g_mid: np.ndarray
    ellipticity: float | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        g_mid = np.asarray(self.g_mid, dtype=float)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise InputError("alpha and beta must be 1-D arrays of equal length")
        if g_mid.shape != (alpha.size + 1,):
            raise InputError(
                f"g_mid needs n + 1 = {alpha.size + 1} midpoint samples, got {g_mid.shape}"
            )
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta)) and np.all(np.isfinite(g_mid))):
            raise InputError("coefficients must be finite")
        if np.any(alpha < 0) or np.any(beta < 0):
            raise InputError("alpha and beta must be nonnegative")
        a = float(g_mid.min()) if self.ellipticity is None else float(self.ellipticity)
        if not a > 0 or np.any(g_mid < a):
            raise InputError(f"g_mid must satisfy g_mid >= a > 0 (a = {a})")
        for arr in (alpha, beta, g_mid):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "g_mid", g_mid)
        object.__setattr__(self, "ellipticity", a)

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def has_coupling(self) -> bool:
        return bool(np.any(self.alpha > 0))

    @property
    def has_damping(self) -> bool:
        return bool(np.any(self.beta > 0))

    def check_nontrivial(self) -> None:
        """Require both ``alpha`` and ``beta`` to be somewhere positive."""
        if not (self.has_coupling and self.has_damping):
            raise InputError("alpha and beta must each be positive somewhere")

    @classmethod
    def from_functions(
        cls,
        grid: Grid1D,
        alpha: Callable[[np.ndarray], np.ndarray] | float,
        beta: Callable[[np.ndarray], np.ndarray] | float,
        g: Callable[[np.ndarray], np.ndarray] | float = 1.0,
        ellipticity: float | None = None,
    ) -> "CoefficientField":
        """Sample ``alpha``, ``beta`` at nodes and ``g`` at midpoints."""

        def sample(f, x):
            if callable(f):
                return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
            return np.full(x.shape, float(f))

        return cls(
            sample(alpha, grid.nodes),
            sample(beta, grid.nodes),
            sample(g, grid.midpoints),
            ellipticity,
        )


def piecewise_constant(breaks, values) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-constant function with ``values[k]`` on ``(breaks[k-1], breaks[k]]``.

    ``breaks`` are the interior jump locations in increasing order and
    ``len(values) == len(breaks) + 1``.  A node sitting exactly on a jump
    takes the value from its left, i.e. the left limit.
    """
    breaks = np.asarray(breaks, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size != breaks.size + 1:
        raise InputError("need one more value than break points")
    if np.any(np.diff(breaks) <= 0):
        raise InputError("break points must be strictly increasing")

    def f(x):
        # side="left": x == break lands in the segment to its left
        return values[np.searchsorted(breaks, np.asarray(x, dtype=float), side="left")]

    return f


@dataclass
class StateVector:
    """The semigroup state ``U = (y, u, z, v)`` with ``u ~ y_t`` and ``v ~ z_t``."""

    y: np.ndarray
    u: np.ndarray
    z: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        parts = [np.asarray(p) for p in (self.y, self.u, self.z, self.v)]
        if any(p.ndim != 1 for p in parts) or len({p.size for p in parts}) != 1:
            raise InputError("state components must be 1-D arrays of identical length")
        dtype = np.result_type(*parts, float)
        self.y, self.u, self.z, self.v = (p.astype(dtype, copy=False) for p in parts)

    @property
    def n(self) -> int:
        return self.y.size

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.y, self.u, self.z, self.v])

    @classmethod
    def from_array(cls, data: np.ndarray) -> "StateVector":
        data = np.asarray(data)
        if data.ndim != 1 or data.size % 4:
            raise InputError("flat state length must be a multiple of 4")
        return cls(*np.split(data, 4))

    @classmethod
    def zeros(cls, n: int, dtype=float) -> "StateVector":
        return cls(*(np.zeros(n, dtype=dtype) for _ in range(4)))


StateLike = Union[StateVector, np.ndarray]


@dataclass(frozen=True)
class EnergyReport:
    """Energy bookkeeping at one sample time.

    ``dissipated`` is the running midpoint-rule integral of the
    dissipation rate, so ``E(0) - E(t) - dissipated`` is the energy
    budget defect of the time integrator.
    """

    t: float
    E: float
    D: float
    H_norm_sq: float
    graph_norm_sq: float
    dissipated: float = field(default=0.0)


def as_array(U: StateLike, n: int | None = None) -> np.ndarray:
    arr = U.to_array() if isinstance(U, StateVector) else np.asarray(U)
    if arr.ndim != 1 or arr.size % 4:
        raise InputError("state must be a StateVector or a flat array of length 4n")
    if n is not None and arr.size != 4 * n:
        raise InputError(f"state has {arr.size // 4} nodes per component, expected {n}")
    return arr


def _forward_diff(y: np.ndarray) -> np.ndarray:
    # zero Dirichlet extension: y_0 = y_{n+1} = 0
    pad = np.zeros(y.size + 2, dtype=y.dtype)
    pad[1:-1] = y
    return np.diff(pad)


def inner_h(U1: StateLike, U2: StateLike, grid: Grid1D, coeffs: CoefficientField) -> complex | float:
    """Discrete energy-space inner product, linear in ``U1``, conjugate-linear in ``U2``."""
    n = grid.n
    if coeffs.n != n:
        raise InputError("coefficient field does not match grid")
    a = as_array(U1, n).reshape(4, n)
    b = as_array(U2, n).reshape(4, n)
    h = grid.h
    g = coeffs.g_mid
    grad = np.sum(g * _forward_diff(a[0]) * np.conj(_forward_diff(b[0])))
    grad += np.sum(g * _forward_diff(a[2]) * np.conj(_forward_diff(b[2])))
    mass = np.sum(a[1] * np.conj(b[1])) + np.sum(a[3] * np.conj(b[3]))
    val = grad / h + h * mass
    if np.iscomplexobj(val):
        return complex(val)
    return float(val)


def norm_h_sq(U: StateLike, grid: Grid1D, coeffs: CoefficientField) -> float:
    return float(np.real(inner_h(U, U, grid, coeffs)))


def energy(U: StateLike, grid: Grid1D, coeffs: CoefficientField) -> float:
    """Total energy of both waves: half the squared energy-space norm."""
    return 0.5 * norm_h_sq(U, grid, coeffs)


def dissipation(U: StateLike, grid: Grid1D, coeffs: CoefficientField) -> float:
    """Instantaneous dissipation rate ``h * sum(beta * |u|^2)``."""
    n = grid.n
    u = as_array(U, n)[n : 2 * n]
    return float(grid.h * np.sum(coeffs.beta * np.abs(u) ** 2))


def graph_norm_sq(U: StateLike, A) -> float:
    """Squared graph norm ``||U||^2 + ||A U||^2`` of the generator ``A``."""
    arr = as_array(U, A.grid.n)
    AU = A.matrix @ arr
    return norm_h_sq(arr, A.grid, A.coeffs) + norm_h_sq(AU, A.grid, A.coeffs)


def energy_report(U: StateLike, A, t: float = 0.0, dissipated: float = 0.0) -> EnergyReport:
    """Collect energy, dissipation rate and both norms for the state ``U``."""
    arr = as_array(U, A.grid.n)
    H = norm_h_sq(arr, A.grid, A.coeffs)
    AH = norm_h_sq(A.matrix @ arr, A.grid, A.coeffs)
    return EnergyReport(
        t=float(t),
        E=0.5 * H,
        D=dissipation(arr, A.grid, A.coeffs),
        H_norm_sq=H,
        graph_norm_sq=H + AH,
        dissipated=float(dissipated),
    )
