"""Dense matrix primitives: SVD, numerical rank, pseudoinverse and norms.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. The
decomposition itself is delegated to LAPACK through :func:`numpy.linalg.svd`;
this module fixes the rank convention and the derived quantities the
velocity-set formulas consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL_RANK = 1e-10

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


class DegenerateMatrixError(ValueError):
    """Raised when a matrix has no nonzero singular value."""


class NumericError(ArithmeticError):
    """Raised when a decomposition fails to converge."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite float64 2-D array."""
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class Svd:
    """Full singular value decomposition ``a = u @ diag(sigma) @ vt``.

    ``u`` is n x n, ``vt`` is m x m and ``sigma`` holds the min(n, m)
    singular values in nonincreasing order. ``rank`` counts the values
    strictly above ``tol_rank * sigma[0]``.
    """

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray
    rank: int
    tol_rank: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape[0], self.vt.shape[0]

    @property
    def u_r(self) -> np.ndarray:
        """Orthonormal basis of the column space (first ``rank`` columns of u)."""
        return self.u[:, : self.rank]

    def reconstruct(self) -> np.ndarray:
        n, m = self.shape
        s = np.zeros((n, m))
        k = len(self.sigma)
        s[:k, :k] = np.diag(self.sigma)
        return self.u @ s @ self.vt


def svd(a, tol_rank: float = DEFAULT_TOL_RANK) -> Svd:
    a = as_matrix(a)
    try:
        u, sigma, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    if sigma.size == 0 or sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sigma > tol_rank * sigma[0]))
    return Svd(u=u, sigma=sigma, vt=vt, rank=rank, tol_rank=tol_rank)


def smallest_nonzero_sv(s: Svd) -> float:
    """Smallest singular value above the rank threshold, i.e. 1/||A^+||."""
    if s.rank == 0:
        raise DegenerateMatrixError("matrix has rank 0")
    return float(s.sigma[s.rank - 1])


def pinv(s: Svd) -> np.ndarray:
    """Moore-Penrose pseudoinverse (m x n) built from a decomposition."""
    n, m = s.shape
    r = s.rank
    if r == 0:
        return np.zeros((m, n))
    return (s.vt[:r].T / s.sigma[:r]) @ s.u[:, :r].T


def mu_constant(rank: int, n: int, m: int) -> float:
    """Pseudoinverse perturbation factor for a rank-``rank`` n x m matrix.

    1 for square nonsingular, sqrt(2) for full rank rectangular, the golden
    ratio for rank deficient matrices.
    """
    if rank < 0 or rank > min(n, m):
        raise ValueError(f"rank {rank} impossible for a {n}x{m} matrix")
    if rank == m == n:
        return 1.0
    if rank == min(m, n):
        return math.sqrt(2.0)
    return GOLDEN_RATIO


def spectral_norm(a) -> float:
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def one_norm(v) -> float:
    return float(np.sum(np.abs(np.asarray(v, dtype=np.float64))))


def two_norm(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(math.sqrt(float(np.dot(v.ravel(), v.ravel()))))


def image_projector(s: Svd) -> np.ndarray:
    """Orthogonal projector onto the column space of the decomposed matrix."""
    ur = s.u_r
    return ur @ ur.T


def in_image(s: Svd, v, tol: float = 1e-9) -> bool:
    """True when ``v`` lies in the column space up to ``tol * max(1, ||v||)``."""
    v = np.asarray(v, dtype=np.float64)
    resid = v - image_projector(s) @ v
    return two_norm(resid) <= tol * max(1.0, two_norm(v))
