"""Constructive solver for Q + U^T X V + V^T X^T U = 0 and its one-sided / symmetric variants.

Solvability holds iff x^T Q x vanishes on ker U and on ker V, and Q annihilates
ker U ∩ ker V.  When it holds, X is assembled from a basis T = [T1 T2 T3 T4]
adapted to the two kernels:

    im [T1 T3] = ker U,  im [T2 T3] = ker V,  im T3 = ker U ∩ ker V,

with W = T^T Q T partitioned conformally and

    X = [(U T2)^T; (U T4)^T]^+ [[-W12^T, -W24], [-W14^T, -W44/2]] [V T1, V T4]^+.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, NumericalInconsistencyError
from .numerics import (DEFAULT_PROFILE, SubspaceBasis, ToleranceProfile, as_matrix,
                       extend_basis, kernel_basis, orthonormal_complement, pseudoinverse,
                       scale_of, sym)


@dataclass(frozen=True)
class ProjectionProblem:
    U: np.ndarray
    V: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        U, V, Q = as_matrix(self.U, "U"), as_matrix(self.V, "V"), as_matrix(self.Q, "Q")
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise InvalidInputError(f"Q must be square, got {Q.shape}")
        if U.shape[1] != n or V.shape[1] != n:
            raise InvalidInputError(
                f"column counts differ: U {U.shape}, V {V.shape}, Q {Q.shape}")
        if np.linalg.norm(Q - Q.T) > DEFAULT_PROFILE.residual_tol * scale_of(Q):
            raise InvalidInputError("Q is not symmetric")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "Q", sym(Q))

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def residual_matrix(self, X) -> np.ndarray:
        UXV = self.U.T @ X @ self.V
        return self.Q + UXV + UXV.T


@dataclass
class FeasibilityDiagnosis:
    l2_holds: bool
    l2_residual: float
    l2_witness: Optional[np.ndarray]
    l3_holds: bool
    l3_residual: float
    l3_witness: Optional[np.ndarray]
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    T4: np.ndarray
    W: np.ndarray
    scale: float

    @property
    def feasible(self) -> bool:
        return self.l2_holds and self.l3_holds

    @property
    def T(self) -> np.ndarray:
        return np.hstack([self.T1, self.T2, self.T3, self.T4])

    def blocks(self) -> dict:
        """W partitioned as W11..W44 (keys '11', '12', ...)."""
        sizes = [self.T1.shape[1], self.T2.shape[1], self.T3.shape[1], self.T4.shape[1]]
        edges = np.concatenate([[0], np.cumsum(sizes)])
        return {f"{a + 1}{b + 1}": self.W[edges[a]:edges[a + 1], edges[b]:edges[b + 1]]
                for a in range(4) for b in range(4)}

    def to_dict(self) -> dict:
        return {
            "l2_holds": self.l2_holds,
            "l2_residual": self.l2_residual,
            "l2_witness": None if self.l2_witness is None else self.l2_witness.tolist(),
            "l3_holds": self.l3_holds,
            "l3_residual": self.l3_residual,
            "l3_witness": None if self.l3_witness is None else self.l3_witness.tolist(),
            "block_sizes": [self.T1.shape[1], self.T2.shape[1], self.T3.shape[1], self.T4.shape[1]],
        }


@dataclass
class ProjectionResult:
    feasible: bool
    X: Optional[np.ndarray]
    residual: float
    diagnosis: Optional[FeasibilityDiagnosis] = None
    reason: str = ""

    def __bool__(self):
        return self.feasible

    def to_dict(self) -> dict:
        out = {"feasible": self.feasible, "residual": self.residual}
        if self.X is not None:
            out["X"] = self.X.tolist()
        if self.diagnosis is not None:
            out["diagnosis"] = self.diagnosis.to_dict()
        if self.reason:
            out["reason"] = self.reason
        return out


def _worst_form(B: np.ndarray, Q: np.ndarray):
    """max |x^T Q x| over unit x in im B, and its maximiser."""
    if B.shape[1] == 0:
        return 0.0, None
    w, v = np.linalg.eigh(sym(B.T @ Q @ B))
    k = int(np.argmax(np.abs(w)))
    return float(abs(w[k])), B @ v[:, k]


def diagnose(prob: ProjectionProblem, prof: ToleranceProfile = DEFAULT_PROFILE,
             scale: Optional[float] = None) -> FeasibilityDiagnosis:
    U, V, Q = prob.U, prob.V, prob.Q
    n = prob.n
    scale = scale_of(Q) if scale is None else scale
    tol = prof.residual_tol * scale

    KU = kernel_basis(U, prof)
    KV = kernel_basis(V, prof)
    # ker U ∩ ker V computed inside ker U so that T3 ⊆ ker U holds to rounding;
    # the rank threshold refers to |V| since V @ KU may be pure rounding noise
    v_norm = float(np.linalg.norm(V, 2)) if V.size else 0.0
    inner = kernel_basis(V @ KU.columns, prof, v_norm).columns if KU.dim else np.zeros((0, 0))
    T3 = KU.columns @ inner if KU.dim else np.zeros((n, 0))
    T3 = SubspaceBasis(np.linalg.qr(T3)[0] if T3.shape[1] else T3, n)
    T1 = extend_basis(T3, KU, ToleranceProfile(prof.rank_tol, max(prof.residual_tol, 1e-8)))
    T2 = extend_basis(T3, KV, ToleranceProfile(prof.rank_tol, max(prof.residual_tol, 1e-8)))
    T4 = orthonormal_complement(np.hstack([T1, T2, T3.columns]), prof)
    T3 = T3.columns
    T = np.hstack([T1, T2, T3, T4])
    if T.shape[1] != n:
        raise NumericalInconsistencyError(
            f"basis construction produced {T.shape[1]} columns for n = {n}")
    W = sym(T.T @ Q @ T)

    # ker V block first, then ker U; the larger violation wins
    rv, wv = _worst_form(np.hstack([T2, T3]), Q)
    ru, wu = _worst_form(np.hstack([T1, T3]), Q)
    l2_res, l2_wit = (rv, wv) if rv >= ru else (ru, wu)

    if T3.shape[1]:
        QT3 = Q @ T3
        l3_res = float(np.linalg.norm(QT3, 2))
        _, _, vt = np.linalg.svd(QT3)
        l3_wit = T3 @ vt[0]
    else:
        l3_res, l3_wit = 0.0, None

    l2_ok = l2_res <= tol
    l3_ok = l3_res <= tol
    return FeasibilityDiagnosis(
        l2_holds=l2_ok, l2_residual=l2_res, l2_witness=None if l2_ok else l2_wit,
        l3_holds=l3_ok, l3_residual=l3_res, l3_witness=None if l3_ok else l3_wit,
        T1=T1, T2=T2, T3=T3, T4=T4, W=W, scale=scale)


def solve_projection(prob: ProjectionProblem, prof: ToleranceProfile = DEFAULT_PROFILE,
                     scale: Optional[float] = None) -> ProjectionResult:
    """Return X with Q + U^T X V + V^T X^T U = 0, or an infeasible result carrying the diagnosis."""
    diag = diagnose(prob, prof, scale)
    if not diag.feasible:
        why = []
        if not diag.l2_holds:
            why.append(f"quadratic form nonzero on ker U ∪ ker V ({diag.l2_residual:.3g})")
        if not diag.l3_holds:
            why.append(f"ker U ∩ ker V not in ker Q ({diag.l3_residual:.3g})")
        return ProjectionResult(False, None, np.inf, diag, "; ".join(why))

    U, V = prob.U, prob.V
    b = diag.blocks()
    left = np.vstack([(U @ diag.T2).T, (U @ diag.T4).T])
    right = np.hstack([V @ diag.T1, V @ diag.T4])
    target = np.block([[-b["12"].T, -b["24"]],
                       [-b["14"].T, -0.5 * b["44"]]])
    X = pseudoinverse(left, prof) @ target @ pseudoinverse(right, prof)
    res = float(np.linalg.norm(prob.residual_matrix(X)))
    if res > prof.residual_tol * diag.scale:
        raise NumericalInconsistencyError(
            f"conditions hold but the constructed X leaves residual {res:.3g}")
    return ProjectionResult(True, X, res, diag)


def solve_onesided(U, Q, prof: ToleranceProfile = DEFAULT_PROFILE,
                   scale: Optional[float] = None) -> ProjectionResult:
    """Solve Q + U^T X + X^T U = 0 (feasible iff x^T Q x = 0 on ker U)."""
    Q = as_matrix(Q, "Q")
    return solve_projection(ProjectionProblem(U, np.eye(Q.shape[0]), Q), prof, scale)


def solve_symmetric(U, Q, prof: ToleranceProfile = DEFAULT_PROFILE,
                    scale: Optional[float] = None) -> ProjectionResult:
    """Solve Q + U^T X U = 0 over symmetric X (feasible iff ker U ⊆ ker Q).

    The candidate X = -(U^+)^T Q U^+ is always re-substituted before being returned.
    """
    U, Q = as_matrix(U, "U"), as_matrix(Q, "Q")
    prob = ProjectionProblem(U, U, Q)
    scale = scale_of(prob.Q) if scale is None else scale
    tol = prof.residual_tol * scale
    K = kernel_basis(U, prof).columns
    leak = float(np.linalg.norm(prob.Q @ K, 2)) if K.shape[1] else 0.0
    if leak > tol:
        _, _, vt = np.linalg.svd(prob.Q @ K)
        return ProjectionResult(False, None, np.inf, None,
                                f"ker U not in ker Q ({leak:.3g}); witness {(K @ vt[0]).tolist()}")
    Up = pseudoinverse(U, prof)
    X = sym(-Up.T @ prob.Q @ Up)
    res = float(np.linalg.norm(prob.Q + U.T @ X @ U))
    if res > tol:
        raise NumericalInconsistencyError(f"closed-form X leaves residual {res:.3g}")
    return ProjectionResult(True, X, res)
