"""Discrete Dirichlet Laplacian on a uniform 1-D grid.

Everything here works with the positive operator ``-d^2/dx^2`` discretized by
second-order central differences, with the two boundary rows eliminated, so
the unknowns are the ``n_interior`` interior node values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg.lapack import dgttrf, dgttrs

from .errors import EigenIterationError, SingularOperatorError

__all__ = [
    "Grid1D",
    "EigenPair",
    "Tridiagonal",
    "TridiagonalLU",
    "build_laplacian",
    "principal_eigenpair",
    "solve_shifted",
    "discrete_dirichlet_eigenvalue",
]

PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on (0, L); only interior nodes carry unknowns."""

    length: float
    n_interior: int

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"grid length must be positive, got {self.length}")
        if int(self.n_interior) != self.n_interior or self.n_interior < 3:
            raise ValueError(f"need at least 3 interior nodes, got {self.n_interior}")

    @property
    def h(self) -> float:
        return self.length / (self.n_interior + 1)

    @cached_property
    def x(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_interior + 1)

    def integrate(self, f: np.ndarray) -> float:
        """Trapezoid rule over [0, L] for a field vanishing at both ends."""
        return float(self.h * np.sum(f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.h * np.dot(f, g))


@dataclass(frozen=True)
class EigenPair:
    lam: float
    phi: np.ndarray


@dataclass(frozen=True)
class Tridiagonal:
    """Constant-coefficient storage of a symmetric tridiagonal matrix."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag.reshape((-1,) + (1,) * (x.ndim - 1)) * x
        off = self.off.reshape((-1,) + (1,) * (x.ndim - 1))
        y[:-1] += off * x[1:]
        y[1:] += off * x[:-1]
        return y

    def to_sparse(self) -> sp.csr_matrix:
        return sp.diags([self.off, self.diag, self.off], [-1, 0, 1], format="csr")

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def scaled(self, scale: float, shift: float = 0.0) -> "Tridiagonal":
        return Tridiagonal(scale * self.diag + shift, scale * self.off)


def build_laplacian(grid: Grid1D) -> Tridiagonal:
    """Return ``-Delta_h``: diagonal 2/h^2, off-diagonals -1/h^2."""
    n = grid.n_interior
    h2 = grid.h**2
    return Tridiagonal(np.full(n, 2.0 / h2), np.full(n - 1, -1.0 / h2))


def discrete_dirichlet_eigenvalue(grid: Grid1D, mode: int = 1) -> float:
    """Closed-form eigenvalue of ``-Delta_h``: (4/h^2) sin^2(m pi h / 2L)."""
    return 4.0 / grid.h**2 * math.sin(mode * math.pi * grid.h / (2.0 * grid.length)) ** 2


class TridiagonalLU:
    """LU factors of a tridiagonal matrix, reusable across many solves.

    Wraps LAPACK ``dgttrf``/``dgttrs``.  A pivot below ``PIVOT_TOL`` in
    magnitude is reported as a singular operator.
    """

    def __init__(self, mat: Tridiagonal):
        self.n = mat.n
        dl, d, du, du2, ipiv, info = dgttrf(mat.off, mat.diag, mat.off)
        if info != 0 or np.min(np.abs(d)) < PIVOT_TOL:
            raise SingularOperatorError(
                f"tridiagonal factorization hit a pivot of magnitude {np.min(np.abs(d)):.3e}"
            )
        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        b = rhs.reshape(self.n, -1)
        x, info = dgttrs(*self._factors, b)
        if info != 0:
            raise SingularOperatorError(f"dgttrs failed with info={info}")
        return x.reshape(rhs.shape)


def solve_shifted(grid: Grid1D, sigma: float, rhs: np.ndarray, d: float = 1.0) -> np.ndarray:
    """Solve ``(-d Delta_h + sigma) x = rhs``.

    A negative ``sigma`` is accepted only while the operator stays positive
    definite, i.e. ``sigma > -d * lambda_1``.
    """
    if sigma < 0 and sigma <= -d * discrete_dirichlet_eigenvalue(grid):
        raise SingularOperatorError(
            f"shift {sigma} makes -d Delta_h + sigma indefinite (d={d})"
        )
    op = build_laplacian(grid).scaled(d, sigma)
    return TridiagonalLU(op).solve(rhs)


def principal_eigenpair(
    grid: Grid1D,
    *,
    rq_tol: float = 1e-12,
    residual_tol: float = 1e-11,
    max_iter: int = 10_000,
) -> EigenPair:
    """Smallest eigenvalue of ``-Delta_h`` by inverse power iteration.

    The eigenvector is scaled to max-norm 1 and is strictly positive.  The
    loop stops once successive Rayleigh quotients agree to ``rq_tol``
    (relative) and the eigen-residual is below ``residual_tol * lambda``.
    """
    lap = build_laplacian(grid)
    lu = TridiagonalLU(lap)
    phi = np.ones(grid.n_interior)
    lam_old = np.inf
    for _ in range(max_iter):
        phi = lu.solve(phi)
        phi /= np.max(np.abs(phi))
        lap_phi = lap.matvec(phi)
        lam = float(np.dot(phi, lap_phi) / np.dot(phi, phi))
        resid = np.max(np.abs(lap_phi - lam * phi))
        if abs(lam - lam_old) <= rq_tol * lam and resid <= residual_tol * lam:
            break
        lam_old = lam
    else:
        raise EigenIterationError(f"inverse iteration did not converge in {max_iter} steps")
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    if np.any(phi <= 0):
        raise EigenIterationError("principal eigenvector is not strictly positive")
    return EigenPair(lam, phi)
