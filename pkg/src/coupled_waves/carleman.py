"""Carleman weights, cutoff functions and a quadrature check of the global
Carleman inequality for ``w_ss + (g w_x)_x = f`` on ``(-b, b) x (0, L)``.

The weights are

    psi   = psi_hat(x) / max(psi_hat) + b^2 - s^2
    phi   = exp(mu psi)
    theta = exp(lambda phi)

with ``b = sqrt(1 + ln(2 + e^mu) / mu)`` and
``b0 = sqrt(b^2 - ln((1 + e^mu) / e^mu) / mu)``.  ``theta`` overflows for
moderate ``lambda, mu``, so every integral is evaluated relative to
``exp(2 lambda max(phi))`` and only ratios are meaningful.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import sympy

from .core import Grid1D, InputError

LN2 = float(np.log(2.0))


# --------------------------------------------------------------------------
# psi_hat


@dataclass(frozen=True)
class PsiHat:
    """``psi_hat(x) = x^p (L - x)^q`` with its single critical point in ``omega0``."""

    length: float
    p: float
    q: float
    omega0: tuple[float, float]

    @property
    def critical_point(self) -> float:
        return self.p * self.length / (self.p + self.q)

    @property
    def max_value(self) -> float:
        return float(self(self.critical_point))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(x, 0, None) ** self.p * np.clip(self.length - x, 0, None) ** self.q

    def derivative(self, x, order: int = 1):
        return self._derivs[order](np.asarray(x, dtype=float))

    @cached_property
    def expr(self) -> sympy.Expr:
        x = sympy.Symbol("x", nonnegative=True)
        return x ** sympy.nsimplify(self.p) * (sympy.Float(self.length, 17) - x) ** sympy.nsimplify(self.q)

    @cached_property
    def _derivs(self):
        x = sympy.Symbol("x", nonnegative=True)
        e = self.expr
        return {k: sympy.lambdify(x, sympy.diff(e, x, k), "numpy") for k in (1, 2)}

    def check(self, grid: Grid1D) -> dict[str, bool]:
        """Sample the three defining properties on the grid nodes."""
        x = grid.nodes
        inside = (x > self.omega0[0]) & (x < self.omega0[1])
        return {
            "positive_inside": bool(np.all(self(x) > 0)),
            "zero_on_boundary": bool(self(0.0) == 0 and self(self.length) == 0),
            "gradient_nonzero_outside_omega0": bool(np.all(np.abs(self.derivative(x[~inside])) > 0)),
        }


def build_psi_hat(grid: Grid1D, omega0: tuple[float, float]) -> PsiHat:
    """Pick exponents ``p, q >= 2`` putting the maximum of ``x^p (L-x)^q``
    at the centre of ``omega0``.

    The smaller exponent is fixed to 2, so the symmetric case gives
    ``p = q = 2`` and a centre at ``L/3`` gives ``(2, 4)``.
    """
    lo, hi = map(float, omega0)
    L = grid.length
    if not 0 < lo < hi < L:
        raise InputError(f"omega0 must be a nonempty open subinterval of (0, {L}) away from the boundary")
    r = 0.5 * (lo + hi) / L
    if r <= 0.5:
        p, q = 2.0, 2.0 * (1 - r) / r
    else:
        p, q = 2.0 * r / (1 - r), 2.0
    # exact rationals for the textbook cases
    p, q = (float(sympy.nsimplify(v, tolerance=1e-12, rational=True)) for v in (p, q))
    return PsiHat(L, p, q, (lo, hi))


# --------------------------------------------------------------------------
# weights


def weight_radii(mu: float) -> tuple[float, float]:
    """``(b, b0)`` for a given ``mu > 0``."""
    b2 = 1.0 + np.log(2.0 + np.exp(mu)) / mu
    # ln((1 + e^mu) / e^mu) = ln(1 + e^-mu), stable for large mu
    b02 = b2 - np.log1p(np.exp(-mu)) / mu
    return float(np.sqrt(b2)), float(np.sqrt(b02))


@dataclass(frozen=True)
class CarlemanWeights:
    mu: float
    lam: float
    b: float
    b0: float
    psi_hat: PsiHat

    def psi(self, s, x):
        s = np.asarray(s, dtype=float)
        return self.psi_hat(x) / self.psi_hat.max_value + self.b**2 - s**2

    def phi(self, s, x):
        return np.exp(self.mu * self.psi(s, x))

    def log_theta(self, s, x):
        """``ln theta = lambda phi`` (``theta`` itself overflows quickly)."""
        return self.lam * self.phi(s, x)

    def theta(self, s, x):
        return np.exp(self.log_theta(s, x))

    @property
    def phi_max(self) -> float:
        return float(np.exp(self.mu * (1.0 + self.b**2)))

    @property
    def inner_log_bound(self) -> float:
        """``lambda (2 + e^mu)``: lower bound of ``ln theta`` for ``|s| <= 1``."""
        return self.lam * (2.0 + np.exp(self.mu))

    @property
    def outer_log_bound(self) -> float:
        """``lambda (1 + e^mu)``: upper bound of ``ln theta`` for ``b0 <= |s| <= b``."""
        return self.lam * (1.0 + np.exp(self.mu))

    def check_bounds(self, ns: int = 200, nx: int = 200, rtol: float = 1e-12) -> dict[str, float]:
        """Worst relative slack of both ``theta`` bounds on an ``ns x nx`` grid.

        Both bounds are attained with equality (at ``|s| = 1`` on the
        boundary and at ``|s| = b0`` at the maximum of ``psi_hat``), so the
        slack is compared against ``rtol`` rather than zero.
        """
        x = np.linspace(0.0, self.psi_hat.length, nx)
        x = np.union1d(x, [self.psi_hat.critical_point])
        s_in = np.linspace(-1.0, 1.0, ns)
        s_out = np.concatenate([np.linspace(-self.b, -self.b0, ns // 2), np.linspace(self.b0, self.b, ns - ns // 2)])
        S, X = np.meshgrid(s_in, x, indexing="ij")
        inner = np.min(self.log_theta(S, X)) / self.inner_log_bound - 1.0
        S, X = np.meshgrid(s_out, x, indexing="ij")
        outer = 1.0 - np.max(self.log_theta(S, X)) / self.outer_log_bound
        return {"inner_slack": float(inner), "outer_slack": float(outer), "ok": bool(inner >= -rtol and outer >= -rtol)}

    def log_weight_derivatives(self):
        """Callables for ``l = lambda phi`` and its derivatives, from symbolic
        differentiation of the definitions.

        Returns a dict with keys ``l, l_s, l_x, l_ss, l_xs, l_xx``.
        """
        s, x = sympy.symbols("s x", real=True)
        psi = self.psi_hat.expr.subs(sympy.Symbol("x", nonnegative=True), x) / sympy.nsimplify(self.psi_hat.max_value) + sympy.Float(self.b) ** 2 - s**2
        l = self.lam * sympy.exp(self.mu * psi)
        out = {
            "l": l,
            "l_s": sympy.diff(l, s),
            "l_x": sympy.diff(l, x),
            "l_ss": sympy.diff(l, s, 2),
            "l_xs": sympy.diff(l, x, s),
            "l_xx": sympy.diff(l, x, 2),
        }
        return {k: sympy.lambdify((s, x), v, "numpy") for k, v in out.items()}


def build_weights(mu: float, lam: float, psi_hat: PsiHat) -> CarlemanWeights:
    if not mu > LN2:
        raise InputError(f"mu must exceed ln 2 = {LN2:.6f} for the ordering 1 < b0 < b < 2 (got mu = {mu})")
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    b, b0 = weight_radii(mu)
    return CarlemanWeights(float(mu), float(lam), b, b0, psi_hat)


# --------------------------------------------------------------------------
# cutoffs


def _smoothstep7(t):
    # 0 -> 1 with vanishing first three derivatives at both ends
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def build_varphi(b: float, b0: float) -> Callable[[np.ndarray], np.ndarray]:
    """C^3 cutoff in ``s``: 1 on ``[-b0, b0]``, 0 at ``|s| >= b``."""
    if not 0 < b0 < b:
        raise InputError("need 0 < b0 < b")

    def varphi(s):
        a = np.abs(np.asarray(s, dtype=float))
        return 1.0 - _smoothstep7((a - b0) / (b - b0))

    return varphi


def build_eta2(r: float, center: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Radial cutoff: 1 for ``|x| <= r/2``, the polynomial
    ``128 / (81 r^10) (r^2 - |x|^2)^3 (16|x|^4 - 2 r^2 |x|^2 + r^4)`` on
    ``r/2 < |x| < r`` and 0 from ``r`` on (``|x|`` measured from ``center``).

    The joins are C^2; the third derivative jumps at both ``r/2`` and ``r``.
    """
    if not r > 0:
        raise InputError("radius must be positive")

    def eta2(x):
        rho = np.abs(np.asarray(x, dtype=float) - center)
        poly = 128.0 / (81.0 * r**10) * (r**2 - rho**2) ** 3 * (16 * rho**4 - 2 * r**2 * rho**2 + r**4)
        return np.where(rho <= r / 2, 1.0, np.where(rho < r, poly, 0.0))

    return eta2


def eta2_expr(r=None):
    """Symbolic polynomial piece of ``eta2`` in ``(rho, r)``."""
    rho = sympy.Symbol("rho", nonnegative=True)
    rr = sympy.Symbol("r", positive=True) if r is None else sympy.nsimplify(r)
    poly = sympy.Rational(128, 81) / rr**10 * (rr**2 - rho**2) ** 3 * (16 * rho**4 - 2 * rr**2 * rho**2 + rr**4)
    return poly, rho, rr


def eta2_gradient_ratio(r: float, samples: int = 2000, center: float = 0.0) -> float:
    """``max |eta2'|^2 / eta2`` over the open transition band ``r/2 < |x| < r``."""
    poly, rho, rr = eta2_expr(r)
    f = sympy.lambdify(rho, poly, "numpy")
    df = sympy.lambdify(rho, sympy.diff(poly, rho), "numpy")
    t = np.linspace(r / 2, r, samples + 2)[1:-1]
    return float(np.max(df(t) ** 2 / f(t)))


# --------------------------------------------------------------------------
# manufactured solutions


@dataclass
class Manufactured:
    """A smooth ``w(s, x)`` vanishing on the boundary of ``(-b, b) x (0, L)``,
    with ``f = w_ss + (g w_x)_x`` from symbolic differentiation."""

    name: str
    w: Callable
    w_s: Callable
    w_x: Callable
    f: Callable
    g: Callable
    ellipticity: float
    b: float
    length: float
    expr: sympy.Expr = field(repr=False)
    g_expr: sympy.Expr = field(default=sympy.Integer(1), repr=False)

    def scaled(self, factor: float) -> "Manufactured":
        return manufactured_from_expr(self.name, factor * self.expr, self.b, self.length, self.g_expr, self.ellipticity)


FAMILIES = ("poly_sine", "gaussian", "psi_product")


def _symbols():
    return sympy.symbols("s x", real=True)


def manufactured_from_expr(name, expr, b, length, g_expr=1, ellipticity=None) -> Manufactured:
    s, x = _symbols()
    g_expr = sympy.sympify(g_expr)
    f_expr = sympy.diff(expr, s, 2) + sympy.diff(g_expr * sympy.diff(expr, x), x)
    lam = lambda e: sympy.lambdify((s, x), e, "numpy")  # noqa: E731
    g_fun = sympy.lambdify(x, g_expr, "numpy")
    if ellipticity is None:
        xs = np.linspace(0.0, length, 2001)
        ellipticity = float(np.min(np.broadcast_to(g_fun(xs), xs.shape)))
    if not ellipticity > 0:
        raise InputError("g must be bounded below by a positive constant")
    m = Manufactured(
        name,
        lam(expr),
        lam(sympy.diff(expr, s)),
        lam(sympy.diff(expr, x)),
        lam(f_expr),
        g_fun,
        float(ellipticity),
        float(b),
        float(length),
        expr,
        g_expr,
    )
    return m


def manufactured(name: str, b: float, length: float, psi_hat: PsiHat | None = None, g_expr=1) -> Manufactured:
    """One of the three shipped families.

    ``poly_sine``   : ``(b^2 - s^2)^2 sin(pi x / L)``
    ``gaussian``    : ``(b^2 - s^2)^2 x (L - x) exp(-(x - 0.6 L)^2 / (2 (0.15 L)^2) - s^2)``
    ``psi_product`` : ``(b^2 - s^2)^2 cos(s / 2) psi_hat(x) / max psi_hat``

    ``"zero"`` is also accepted; both sides then vanish identically.
    """
    s, x = _symbols()
    B = sympy.Float(b)
    L = sympy.Float(length, 17)
    prof = (B**2 - s**2) ** 2
    if name == "poly_sine":
        expr = prof * sympy.sin(sympy.pi * x / L)
    elif name == "gaussian":
        c, sig = 0.6 * L, 0.15 * L
        expr = prof * x * (L - x) * sympy.exp(-((x - c) ** 2) / (2 * sig**2) - s**2)
    elif name == "zero":
        expr = sympy.Integer(0)
    elif name == "psi_product":
        if psi_hat is None:
            raise InputError("psi_product needs psi_hat")
        ph = psi_hat.expr.subs(sympy.Symbol("x", nonnegative=True), x) / sympy.Float(psi_hat.max_value)
        expr = prof * sympy.cos(s / 2) * ph
    else:
        raise InputError(f"unknown manufactured family {name!r}; choose from {FAMILIES}")
    return manufactured_from_expr(name, expr, b, length, g_expr)


# --------------------------------------------------------------------------
# the check


def _graded_nodes(lo, hi, center, width, n):
    """Uniform coarse nodes plus two refined layers around a Laplace peak."""
    pieces = [np.linspace(lo, hi, n)]
    for k in (60.0, 12.0):
        a, b = max(lo, center - k * width), min(hi, center + k * width)
        if b > a:
            pieces.append(np.linspace(a, b, n))
    return np.unique(np.concatenate(pieces))


@dataclass
class CarlemanResult:
    """Both sides of the inequality, all scaled by ``exp(-2 lambda max phi)``.

    ``lhs <= C (rhs_f + rhs_local)`` is what ``passed`` records.
    """

    mu: float
    lam: float
    lhs: float
    rhs_f: float
    rhs_local: float
    C: float
    log_scale: float
    resolution: int

    @property
    def rhs(self) -> float:
        return self.rhs_f + self.rhs_local

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)

    @property
    def passed(self) -> bool:
        return bool(self.lhs <= self.C * self.rhs)


def _trapz2(F, s, x):
    return np.trapezoid(np.trapezoid(F, x, axis=1), s)


def carleman_integrals(w: Manufactured, weights: CarlemanWeights, omega0, resolution: int = 150):
    """Scaled ``(lhs, rhs_f_integral, local_integral)`` (constants not applied)."""
    ph = weights.psi_hat
    mu, lam = weights.mu, weights.lam
    b = weights.b
    phimax = weights.phi_max
    # Laplace widths of exp(2 lambda phi) around (0, x*)
    ws = 1.0 / np.sqrt(4.0 * lam * mu * phimax)
    kappa = -ph.derivative(ph.critical_point, 2) / ph.max_value
    wx = 1.0 / np.sqrt(2.0 * lam * mu * phimax * kappa)
    s = _graded_nodes(-b, b, 0.0, ws, resolution)
    x = _graded_nodes(0.0, ph.length, ph.critical_point, wx, resolution)
    x = np.union1d(x, np.asarray(omega0, dtype=float))
    S, X = np.meshgrid(s, x, indexing="ij")
    phi = weights.phi(S, X)
    E = np.exp(2.0 * lam * (phi - phimax))
    W, Ws, Wx, F = (np.broadcast_to(fun(S, X), S.shape) for fun in (w.w, w.w_s, w.w_x, w.f))
    core_ = lambda a: phi * (a * Wx**2 + Ws**2 + lam**2 * mu**2 * phi**2 * W**2)  # noqa: E731
    lhs = lam * mu**2 * _trapz2(E * core_(w.ellipticity), s, x)
    rhs_f = _trapz2(E * F**2, s, x)
    inside = (x >= omega0[0]) & (x <= omega0[1])
    local = lam * mu**2 * _trapz2((E * core_(1.0))[:, inside], s, x[inside])
    return lhs, rhs_f, local, 2.0 * lam * phimax


def carleman_check(
    w: Manufactured,
    weights: CarlemanWeights,
    omega0,
    c_candidate: float,
    resolution: int = 150,
    lambda0: float = 0.0,
    richardson_tol: float = 5e-3,
    bc_tol: float = 1e-10,
) -> CarlemanResult:
    """Evaluate the Carleman inequality for the manufactured ``w``.

    Integrals use the composite trapezoid rule on tensor grids graded
    towards the peak of ``theta^2``; the result is accepted only when
    doubling the resolution changes ``lhs`` and ``rhs`` by less than
    ``richardson_tol`` (relative), otherwise the resolution keeps doubling
    up to 8x before giving up with :class:`InputError`.
    """
    if weights.lam < lambda0:
        raise InputError(f"lambda = {weights.lam} is below the candidate lambda0 = {lambda0}")
    if not np.isclose(w.b, weights.b):
        raise InputError("manufactured solution was built for a different b")
    _check_boundary(w, weights.b, bc_tol)
    res = resolution
    prev = carleman_integrals(w, weights, omega0, res)
    for _ in range(3):
        res *= 2
        cur = carleman_integrals(w, weights, omega0, res)
        if _close(prev[0], cur[0], richardson_tol) and _close(prev[1] + prev[2], cur[1] + cur[2], richardson_tol):
            lhs, rhs_f, local, scale = cur
            return CarlemanResult(weights.mu, weights.lam, lhs, rhs_f, local, c_candidate, scale, res)
        prev = cur
    raise InputError(f"quadrature not converged at resolution {res} (mu={weights.mu}, lambda={weights.lam})")


def _close(a, b, tol):
    if a == b:
        return True
    return abs(a - b) <= tol * max(abs(a), abs(b))


def _check_boundary(w: Manufactured, b: float, tol: float) -> None:
    t = np.linspace(-b, b, 101)
    x = np.linspace(0.0, w.length, 101)
    S, X = np.meshgrid(t, x, indexing="ij")
    scale = max(float(np.max(np.abs(w.w(S, X)))), 1e-300)
    edges = [w.w(t, 0.0 * t), w.w(t, w.length + 0.0 * t), w.w(-b + 0.0 * x, x), w.w(b + 0.0 * x, x)]
    worst = max(float(np.max(np.abs(np.broadcast_to(e, (101,))))) for e in edges)
    if worst > tol * scale:
        raise InputError(f"w violates the boundary conditions (max |w| on boundary = {worst:.3e})")


def carleman_sweep(
    family: str,
    mu: float,
    lambdas: Sequence[float],
    c_candidate: float,
    length: float,
    omega0,
    g_expr=1,
    resolution: int = 150,
) -> list[CarlemanResult]:
    """Run :func:`carleman_check` for one family over a list of ``lambda``."""
    ph = build_psi_hat(Grid1D(length, 3), omega0)
    b, _ = weight_radii(mu)
    w = manufactured(family, b, length, ph, g_expr)
    return [carleman_check(w, build_weights(mu, lam, ph), omega0, c_candidate, resolution) for lam in lambdas]


def lambda_threshold(results: Sequence[CarlemanResult]) -> float | None:
    """Smallest sampled ``lambda`` from which every larger sample passes."""
    ordered = sorted(results, key=lambda r: r.lam)
    threshold = None
    for r in reversed(ordered):
        if not r.passed:
            break
        threshold = r.lam
    return threshold


def write_carleman_csv(path, results: Sequence[CarlemanResult]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["mu", "lambda", "lhs", "rhs_f_term", "rhs_local_term", "ratio", "pass"])
        for r in results:
            wr.writerow(
                [
                    f"{r.mu:.17g}",
                    f"{r.lam:.17g}",
                    f"{r.lhs:.17g}",
                    f"{r.C * r.rhs_f:.17g}",
                    f"{r.C * r.rhs_local:.17g}",
                    f"{r.ratio:.17g}",
                    int(r.passed),
                ]
            )
