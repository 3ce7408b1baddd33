"""Spectra, spectral-region fits and resolvent norms of the discrete generator.

All norms are energy norms.  The generator ``A`` is mapped to
``B = W A W^{-1}`` (see :attr:`GeneratorMatrix.symmetrized`), after which
``||(A - gamma)^{-1}||`` in the energy norm is the Euclidean
``1 / sigma_min(gamma I - B)``.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar
from scipy.special import lambertw

from .core import InputError
from .discretization import GeneratorMatrix

DENSE_EIG_LIMIT = 4000
DENSE_SVD_LIMIT = 200


class EigenSolverError(RuntimeError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class AtSpectrumError(ArithmeticError):
    """The shift is numerically an eigenvalue; the resolvent norm is unbounded."""

    def __init__(self, gamma, sigma_min):
        super().__init__(f"gamma = {gamma} is at the spectrum (sigma_min = {sigma_min:.3e})")
        self.gamma = gamma
        self.sigma_min = sigma_min


def worker_count(requested: int | None = None) -> int:
    """Thread cap: explicit argument, else ``COUPLED_WAVE_THREADS``, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("COUPLED_WAVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"COUPLED_WAVE_THREADS must be an integer, got {env!r}") from None
    return 1


def eig_tolerance(A: GeneratorMatrix) -> float:
    """``1e-8 * ||A||_1``; eigenvalues with ``|Re| <`` this count as imaginary."""
    return 1e-8 * A.norm_1()


@dataclass
class Spectrum:
    """Eigenvalues sorted by ``|Im|`` with energy-norm residuals.

    ``vectors`` (when kept) are in energy-orthonormal coordinates; map them
    back with :meth:`GeneratorMatrix.from_energy_coords`.
    """

    values: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.values.size

    def closest(self, target: complex) -> complex:
        return complex(self.values[np.argmin(np.abs(self.values - target))])


def _sort_order(vals: np.ndarray) -> np.ndarray:
    # conjugate pairs share |Im| and Re, so they end up adjacent (negative Im first)
    return np.lexsort((vals.imag, np.round(vals.real, 12), np.abs(vals.imag)))


def spectrum(A: GeneratorMatrix, targets: Sequence[complex] | None = None, k: int = 6, keep_vectors: bool = False) -> Spectrum:
    """Eigenpairs of the generator.

    Without ``targets`` the full spectrum is computed densely (``4n <=
    DENSE_EIG_LIMIT``).  With ``targets`` shift-invert Arnoldi returns the
    ``k`` eigenvalues nearest each target (and their conjugates).
    """
    B = A.symmetrized
    N = B.shape[0]
    if targets is None:
        if N > DENSE_EIG_LIMIT:
            raise InputError(f"4n = {N} exceeds the dense limit {DENSE_EIG_LIMIT}; pass targets")
        vals, vecs = scipy.linalg.eig(B.toarray())
    else:
        found_v, found_x = [], []
        for target in targets:
            kk = min(k, N - 2)
            try:
                v, x = spla.eigs(B.astype(complex), k=kk, sigma=complex(target), which="LM")
            except spla.ArpackNoConvergence as exc:
                res = None
                if exc.eigenvalues.size:
                    r = B @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
                    res = np.linalg.norm(r, axis=0)
                raise EigenSolverError(f"shift-invert Arnoldi did not converge near {target}", res) from exc
            found_v.append(v)
            found_x.append(x)
            # real matrix: the conjugate pairs come for free
            found_v.append(v.conj())
            found_x.append(x.conj())
        vals = np.concatenate(found_v)
        vecs = np.concatenate(found_x, axis=1)
        _, idx = np.unique(np.round(vals, 10), return_index=True)
        vals, vecs = vals[idx], vecs[:, idx]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    res = np.linalg.norm(B @ vecs - vecs * vals, axis=0)
    order = _sort_order(vals)
    return Spectrum(vals[order], res[order], vecs[:, order] if keep_vectors else None)


def eigenvalues(A: GeneratorMatrix, targets: Sequence[complex] | None = None, k: int = 6) -> np.ndarray:
    """Eigenvalues of ``A`` sorted by ``|Im|`` (conjugate pairs adjacent)."""
    return spectrum(A, targets, k).values


@dataclass
class RegionFit:
    """Threshold constant for ``Re lam <= -exp(-C |Im lam|) / C`` on ``|lam| >= 2 / C``.

    ``C_region`` is the smallest ``C0`` such that the inequality holds for
    every retained eigenvalue and every ``C >= C0``.  Eigenvalues with
    ``|Re| < tol`` are reported in ``imaginary`` and excluded from the fit;
    their presence, or any ``Re > tol``, makes the fit infeasible.
    """

    C_region: float
    feasible: bool
    inconclusive: bool
    tol: float
    retained: np.ndarray
    imaginary: np.ndarray
    unstable: np.ndarray
    critical: complex | None = None

    def holds(self, C: float) -> bool:
        lam = self.retained
        mask = np.abs(lam) >= 2.0 / C
        return bool(np.all(lam.real[mask] <= -np.exp(-C * np.abs(lam.imag[mask])) / C))


def _region_threshold(lam: complex) -> float:
    """Smallest ``C`` with ``exp(-C |Im|) / C <= |Re|`` for one eigenvalue."""
    a = abs(lam.real)
    b = abs(lam.imag)
    if b == 0:
        return 1.0 / a
    # C b + ln C = -ln a  <=>  (C b) e^{C b} = b / a
    z = b / a
    if z < 1e-8:
        return (1.0 - z) / a  # W(z) = z - z^2 + ...
    return float(np.real(lambertw(z))) / b


def fit_spectral_region(eigs, tol: float = 1e-10) -> RegionFit:
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        raise InputError("need at least one eigenvalue")
    imaginary = eigs[np.abs(eigs.real) < tol]
    unstable = eigs[eigs.real >= tol]
    retained = eigs[eigs.real <= -tol]
    if retained.size == 0:
        return RegionFit(np.inf, False, True, tol, retained, imaginary, unstable)
    C0, critical = 0.0, None
    for lam in retained:
        c = _region_threshold(lam)
        # the eigenvalue only constrains C >= 2/|lam|
        if c > 2.0 / abs(lam) and c > C0:
            C0, critical = c, complex(lam)
    feasible = imaginary.size == 0 and unstable.size == 0
    return RegionFit(C0, feasible, False, tol, retained, imaginary, unstable, critical)


def _sigma_min_dense(B: np.ndarray, gamma: complex) -> float:
    M = gamma * np.eye(B.shape[0]) - B
    return float(scipy.linalg.svdvals(M)[-1])


def _sigma_min_sparse(B: sp.spmatrix, gamma: complex, tol: float = 1e-10) -> float:
    N = B.shape[0]
    M = (gamma * sp.identity(N, format="csc", dtype=complex) - B.astype(complex)).tocsc()
    try:
        lu = spla.splu(M)
    except RuntimeError:
        return 0.0
    if not np.all(np.isfinite(lu.U.diagonal())) or np.min(np.abs(lu.U.diagonal())) == 0:
        return 0.0
    op = spla.LinearOperator(
        (N, N),
        matvec=lu.solve,
        rmatvec=lambda x: lu.solve(np.asarray(x, dtype=complex), trans="H"),
        dtype=complex,
    )
    # deterministic start vector keeps sweeps reproducible
    v0 = np.ones(N, dtype=complex) / np.sqrt(N)
    s = spla.svds(op, k=1, which="LM", tol=tol, v0=v0, return_singular_vectors=False, maxiter=20 * N)
    top = float(s[0])
    return 0.0 if not np.isfinite(top) or top == 0 else 1.0 / top


def sigma_min(A: GeneratorMatrix, gamma: complex, method: str = "auto") -> float:
    """Smallest energy-norm singular value of ``gamma I - A``."""
    B = A.symmetrized
    if method == "auto":
        method = "dense" if B.shape[0] <= DENSE_SVD_LIMIT else "sparse"
    if method == "dense":
        return _sigma_min_dense(B.toarray(), complex(gamma))
    if method == "sparse":
        return _sigma_min_sparse(B, complex(gamma))
    raise InputError(f"unknown method {method!r}")


def resolvent_norm(A: GeneratorMatrix, gamma: complex, method: str = "auto") -> float:
    """``||(A - gamma I)^{-1}||`` in the energy norm.

    Raises :class:`AtSpectrumError` when ``sigma_min < 1e-14 ||B||_1``.
    """
    s = sigma_min(A, gamma, method)
    scale = float(abs(A.symmetrized).sum(axis=0).max())
    if s < 1e-14 * scale:
        raise AtSpectrumError(gamma, s)
    return 1.0 / s


@dataclass(frozen=True)
class SpectralPoint:
    gamma: complex
    kind: str  # "eigenvalue" or "resolvent-sample"
    value: complex | float
    flag: str = ""


def exponential_constant(sigma, norm) -> float:
    """Smallest ``C`` with ``norm <= C exp(C sigma)`` (sigma > 0)."""
    return float(np.real(lambertw(sigma * norm))) / sigma


@dataclass
class SweepResult:
    points: list[SpectralPoint]
    C_res: float
    flagged: int

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.gamma.imag for p in self.points])

    @property
    def norms(self) -> np.ndarray:
        return np.array([p.value if not p.flag else np.inf for p in self.points], dtype=float)

    def peak(self, lo: float = -np.inf, hi: float = np.inf) -> tuple[float, float]:
        """``(sigma, norm)`` of the largest sample in ``[lo, hi]``."""
        s, v = self.sigmas, self.norms
        mask = (s >= lo) & (s <= hi)
        i = np.flatnonzero(mask)[np.argmax(v[mask])]
        return float(s[i]), float(v[i])


def _safe_norm(A, sigma, method):
    try:
        return resolvent_norm(A, 1j * sigma, method), ""
    except AtSpectrumError:
        return np.inf, "at-spectrum"


def _neg_log_norm(sigma, A, method):
    val = _safe_norm(A, sigma, method)[0]
    return -np.log(val) if np.isfinite(val) else -1e300


def resolvent_sweep(
    A: GeneratorMatrix,
    sigma_min: float,
    sigma_max: float,
    count: int,
    refine_peaks: bool = True,
    method: str = "auto",
    workers: int | None = None,
    xatol: float = 1e-10,
) -> SweepResult:
    """Sample ``||(A - i sigma)^{-1}||`` on ``[sigma_min, sigma_max]``.

    The uniform samples are followed by a bounded scalar maximization
    inside the bracket of every interior local maximum, so sharp peaks near
    weakly damped eigenvalues are resolved.  ``C_res`` is the smallest ``C``
    with ``norm <= C exp(C sigma)`` over the unflagged samples.
    """
    if not 1 < sigma_min < sigma_max:
        raise InputError(f"need 1 < sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]")
    if count < 2:
        raise InputError("need at least two samples")
    sig = np.linspace(sigma_min, sigma_max, int(count))
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        results = list(pool.map(lambda s: _safe_norm(A, s, method), sig))
    samples = {float(s): r for s, r in zip(sig, results)}

    if refine_peaks:
        vals = np.array([r[0] for r in results])
        for i in range(1, len(sig) - 1):
            if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1] and np.isfinite(vals[i]):
                opt = minimize_scalar(
                    _neg_log_norm,
                    args=(A, method),
                    bounds=(sig[i - 1], sig[i + 1]),
                    method="bounded",
                    options={"xatol": xatol},
                )
                s_star = float(opt.x)
                samples[s_star] = _safe_norm(A, s_star, method)

    points, cs, flagged = [], [], 0
    for s in sorted(samples):
        val, flag = samples[s]
        points.append(SpectralPoint(1j * s, "resolvent-sample", val, flag))
        if flag:
            flagged += 1
        else:
            cs.append(exponential_constant(s, val))
    C_res = max(cs) if cs else np.inf
    return SweepResult(points, C_res, flagged)


def hille_yosida_ratio(A: GeneratorMatrix, gamma: complex, method: str = "auto") -> float:
    """``Re(gamma) * ||(A - gamma)^{-1}||``; at most 1 for a contraction semigroup."""
    if not gamma.real > 0:
        raise InputError("Hille-Yosida check needs Re gamma > 0")
    return gamma.real * resolvent_norm(A, gamma, method)


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "resolvent_norm", "log_norm", "flag"])
        for p in result.points:
            val = float(p.value)
            log = np.log(val) if np.isfinite(val) else np.inf
            w.writerow([f"{p.gamma.imag:.17g}", f"{val:.17g}", f"{log:.17g}", p.flag or "ok"])


def write_spectrum_csv(path, spec: Spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "residual"])
        for lam, r in zip(spec.values, spec.residuals):
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{r:.17g}"])
