"""Flux-form elliptic operator and the 4n x 4n generator of the coupled system."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .core import CoefficientField, Grid1D, InputError


def assemble_elliptic(grid: Grid1D, g_mid) -> sp.csr_matrix:
    """Return the sparse matrix of ``y -> (g y_x)_x`` with zero Dirichlet data.

    Row ``i`` is ``[g_{i+1/2}(y_{i+1} - y_i) - g_{i-1/2}(y_i - y_{i-1})] / h^2``.
    The matrix is symmetric and negative definite whenever ``g_mid > 0``.
    """
    g = np.asarray(g_mid, dtype=float)
    if g.shape != (grid.n + 1,):
        raise InputError(f"g_mid needs {grid.n + 1} samples, got {g.shape}")
    if not np.all(g > 0):
        raise InputError("elliptic coefficient must be positive at every midpoint")
    h2 = grid.h**2
    main = -(g[:-1] + g[1:]) / h2
    off = g[1:-1] / h2
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Discrete generator acting on the flat state ``(y, u, z, v)``.

    ``matrix`` has block rows

        (u,  L y - beta u - alpha v,  v,  L z + alpha u).
    """

    matrix: sp.csr_matrix
    Lg: sp.csr_matrix
    grid: Grid1D
    coeffs: CoefficientField

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def stiffness_factor(self) -> sp.csr_matrix:
        """Upper bidiagonal ``R`` with ``R^T R = -L_g`` (banded Cholesky)."""
        n = self.grid.n
        K = -self.Lg
        ab = np.zeros((2, n))
        ab[0, 1:] = K.diagonal(1)
        ab[1] = K.diagonal(0)
        c = scipy.linalg.cholesky_banded(ab, lower=False)
        return sp.diags([c[1], c[0, 1:]], [0, 1], format="csr")

    @cached_property
    def energy_factor(self) -> sp.csr_matrix:
        """``W`` with ``W^T W`` equal to the Gram matrix of :func:`inner_h`."""
        n = self.grid.n
        R = self.stiffness_factor
        I = sp.identity(n, format="csr")
        return (np.sqrt(self.grid.h) * sp.block_diag([R, I, R, I], format="csr")).tocsr()

    @cached_property
    def symmetrized(self) -> sp.csr_matrix:
        """``B = W A W^{-1}``: the generator in energy-orthonormal coordinates.

        Spectral and operator-norm questions about ``A`` in the energy norm
        become Euclidean questions about ``B``.  With ``beta = 0`` the matrix
        ``B`` is exactly skew-symmetric.
        """
        R = self.stiffness_factor
        Rt = R.T.tocsr()
        da = sp.diags(self.coeffs.alpha)
        db = sp.diags(self.coeffs.beta)
        B = sp.bmat(
            [
                [None, R, None, None],
                [-Rt, -db, None, -da],
                [None, None, None, R],
                [None, da, -Rt, None],
            ],
            format="csr",
        )
        return B

    def to_energy_coords(self, U: np.ndarray) -> np.ndarray:
        return self.energy_factor @ U

    def from_energy_coords(self, V: np.ndarray) -> np.ndarray:
        n = self.grid.n
        V = np.asarray(V).reshape(4, n) / np.sqrt(self.grid.h)
        R = self.stiffness_factor
        ab = np.zeros((2, n))
        ab[0, 1:] = R.diagonal(1)
        ab[1] = R.diagonal(0)
        y = scipy.linalg.solve_banded((0, 1), ab, V[0])
        z = scipy.linalg.solve_banded((0, 1), ab, V[2])
        return np.concatenate([y, V[1], z, V[3]])

    def norm_1(self) -> float:
        return float(abs(self.matrix).sum(axis=0).max())

    def export_coo(self, path, symmetrized: bool = False) -> None:
        """Write ``row col value`` lines (0-based, 17 significant digits)."""
        export_coo(self.symmetrized if symmetrized else self.matrix, path)


def assemble_generator(Lg: sp.spmatrix, coeffs: CoefficientField, grid: Grid1D) -> GeneratorMatrix:
    """Build the sparse generator from the elliptic matrix and coefficients.

    The grid is carried along because the energy inner product needs ``h``.
    """
    n = coeffs.n
    if Lg.shape != (n, n):
        raise InputError(f"elliptic matrix is {Lg.shape}, coefficients have n = {n}")
    if grid.n != n:
        raise InputError("grid and coefficients disagree on n")
    Lg = sp.csr_matrix(Lg)
    I = sp.identity(n, format="csr")
    da = sp.diags(coeffs.alpha)
    db = sp.diags(coeffs.beta)
    A = sp.bmat(
        [
            [None, I, None, None],
            [Lg, -db, None, -da],
            [None, None, None, I],
            [None, da, Lg, None],
        ],
        format="csr",
    )
    A.eliminate_zeros()
    return GeneratorMatrix(A, Lg, grid, coeffs)


def build_generator(grid: Grid1D, coeffs: CoefficientField) -> GeneratorMatrix:
    """Shorthand for ``assemble_generator(assemble_elliptic(grid, g), coeffs, grid)``."""
    return assemble_generator(assemble_elliptic(grid, coeffs.g_mid), coeffs, grid)


def export_coo(M: sp.spmatrix, path) -> None:
    coo = sp.coo_matrix(M)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{r} {c} {v:.17g}\n" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
    Path(path).write_text("".join(lines))


def load_coo(path, shape) -> sp.csr_matrix:
    text = Path(path).read_text()
    if not text.strip():
        return sp.csr_matrix(shape)
    data = np.loadtxt(text.splitlines(), ndmin=2)
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=shape)
