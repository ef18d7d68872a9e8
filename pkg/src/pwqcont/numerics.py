"""Tolerance-aware dense linear algebra: rank, kernels, pseudoinverse, basis extension.

Every rank decision goes through one SVD threshold so that kernels, ranks and
pseudoinverses agree with each other for a given :class:`ToleranceProfile`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, PreconditionError


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical thresholds.

    Parameters
    ----------
    rank_tol : float
        Singular values below ``rank_tol * s_max`` count as zero.
    residual_tol : float
        Equality residuals are compared against ``residual_tol * scale`` where
        ``scale = max(1, ||.||_F)`` of the relevant data.
    """

    rank_tol: float = 1e-10
    residual_tol: float = 1e-9

    def __post_init__(self):
        if not (self.rank_tol > 0 and self.residual_tol > 0):
            raise InvalidInputError("tolerances must be positive")


DEFAULT_PROFILE = ToleranceProfile()


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^ambient_dim, stored column-wise."""

    columns: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T


def as_matrix(M, name="matrix") -> np.ndarray:
    """Convert to a finite 2-D float array, raising InvalidInputError otherwise."""
    try:
        A = np.array(M, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: not a numeric matrix ({exc})") from None
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name}: contains non-finite entries")
    return A


def scale_of(*mats) -> float:
    """max(1, sum of Frobenius norms) used to normalise residuals."""
    return max(1.0, float(sum(np.linalg.norm(M) for M in mats)))


def _numerical_rank(s, rank_tol, reference=0.0) -> int:
    top = max(s[0] if s.size else 0.0, reference)
    if top == 0.0:
        return 0
    return int(np.count_nonzero(s >= rank_tol * top))


def _canonical_signs(B: np.ndarray) -> np.ndarray:
    # the largest-magnitude entry of each column is made positive
    B = B.copy()
    for k in range(B.shape[1]):
        idx = np.argmax(np.abs(B[:, k]) - 1e-12 * np.arange(B.shape[0]))
        if B[idx, k] < 0:
            B[:, k] = -B[:, k]
    return B + 0.0


def rank_tol(M, prof: ToleranceProfile = DEFAULT_PROFILE) -> int:
    A = as_matrix(M)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return _numerical_rank(s, prof.rank_tol)


def kernel_basis(M, prof: ToleranceProfile = DEFAULT_PROFILE,
                 reference: float = 0.0) -> SubspaceBasis:
    """Orthonormal basis of ker M from the trailing right-singular vectors.

    A matrix with zero rows has the whole space as its kernel.  ``reference``
    raises the scale the relative threshold applies to, for products such as
    V @ B whose own largest singular value may be pure rounding.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim == 2 and A.shape[0] == 0:
        return SubspaceBasis(np.eye(A.shape[1]), A.shape[1])
    A = as_matrix(A)
    n = A.shape[1]
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    k = _numerical_rank(s, prof.rank_tol, reference)
    return SubspaceBasis(_canonical_signs(vt[k:].T), n)


def range_basis(M, prof: ToleranceProfile = DEFAULT_PROFILE) -> SubspaceBasis:
    """Orthonormal basis of the column space of M."""
    A = np.asarray(M, dtype=float)
    m = A.shape[0]
    if A.size == 0:
        return SubspaceBasis(np.zeros((m, 0)), m)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    k = _numerical_rank(s, prof.rank_tol)
    return SubspaceBasis(_canonical_signs(u[:, :k]), m)


def pseudoinverse(M, prof: ToleranceProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Moore-Penrose pseudoinverse using the profile's rank threshold."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        A = as_matrix(A)
    if A.size and not np.all(np.isfinite(A)):
        raise InvalidInputError("pseudoinverse: non-finite entries")
    m, n = A.shape
    if A.size == 0:
        return np.zeros((n, m))
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    k = _numerical_rank(s, prof.rank_tol)
    return (vt[:k].T / s[:k]) @ u[:, :k].T


def extend_basis(inner: SubspaceBasis, outer: SubspaceBasis,
                 prof: ToleranceProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Columns E, orthonormal and orthogonal to ``inner``, with [inner | E] a basis of span(outer).

    Raises
    ------
    PreconditionError
        If span(inner) is not contained in span(outer).
    """
    n = outer.ambient_dim
    if inner.ambient_dim != n:
        raise InvalidInputError("extend_basis: ambient dimensions differ")
    Bi, Bo = inner.columns, outer.columns
    if Bi.shape[1]:
        leak = np.linalg.norm(Bi - Bo @ (Bo.T @ Bi))
        if leak > prof.residual_tol * max(1.0, np.sqrt(Bi.shape[1])):
            raise PreconditionError(
                f"extend_basis: inner subspace not contained in outer (leak {leak:.3g})")
    want = Bo.shape[1] - Bi.shape[1]
    if want <= 0:
        return np.zeros((n, 0))
    Y = Bo - Bi @ (Bi.T @ Bo)
    u, s, _ = np.linalg.svd(Y, full_matrices=False)
    return _canonical_signs(u[:, :want])


def orthonormal_complement(B, prof: ToleranceProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column space of B."""
    B = np.asarray(B, dtype=float)
    return kernel_basis(B.T, prof).columns


def sym(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)
