"""Continuity of piecewise quadratic functions V(x) = x^T P_i x on Cx ∈ S_i.

Four independent routes decide continuity on a simplicial conic partition:

* ray pairs: the transformed blocks agree on every pair of shared rays,
* subspace: W_ij^T (P_i - P_j) W_ij = 0 with W_ij spanning {x | Cx ∈ im Z_ij},
* multipliers: P_i - P_j = (H_ij C)^T Γ_ij + Γ_ij^T (H_ij C) is solvable,
* parametrisation: P_i = F_i^T Φ F_i for one symmetric Φ.

:func:`cross_validate` checks that they always agree.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .cones import SimplicialConicPartition, locate, shared_boundary
from .errors import (InvalidInputError, NumericalInconsistencyError, OutOfDomainError,
                     PreconditionError)
from .numerics import (DEFAULT_PROFILE, ToleranceProfile, as_matrix, kernel_basis,
                       pseudoinverse, rank_tol, scale_of, sym)
from .projection import solve_onesided


@dataclass(frozen=True, eq=False)
class PwqFunction:
    C: np.ndarray
    P: tuple

    def __post_init__(self):
        C = as_matrix(self.C, "C")
        m, n = C.shape
        if m > n or rank_tol(C) != m:
            raise InvalidInputError(f"C ({m}x{n}) must have full row rank")
        Ps = []
        for k, Pk in enumerate(self.P):
            Pk = as_matrix(Pk, f"P[{k}]")
            if Pk.shape != (n, n):
                raise InvalidInputError(f"P[{k}] has shape {Pk.shape}, expected {(n, n)}")
            if np.linalg.norm(Pk - Pk.T) > DEFAULT_PROFILE.residual_tol * scale_of(Pk):
                raise InvalidInputError(f"P[{k}] is not symmetric")
            Ps.append(sym(Pk))
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", tuple(Ps))

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def N(self) -> int:
        return len(self.P)

    def scaled(self, alpha: float) -> "PwqFunction":
        return PwqFunction(self.C, tuple(alpha * Pk for Pk in self.P))

    def to_dict(self) -> dict:
        return {"C": self.C.tolist(), "P": [Pk.tolist() for Pk in self.P]}

    @classmethod
    def from_dict(cls, data: dict) -> "PwqFunction":
        try:
            return cls(np.array(data["C"], dtype=float), tuple(data["P"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"pwq: malformed ({exc})") from None


def _check_sizes(pwq: PwqFunction, p: SimplicialConicPartition):
    if pwq.N != p.N:
        raise InvalidInputError(f"{pwq.N} matrices for {p.N} cones")
    if pwq.m != p.m:
        raise InvalidInputError(f"C has {pwq.m} rows, partition lives in R^{p.m}")


def constrained_pairs(p: SimplicialConicPartition, n: int) -> list:
    """Pairs whose boundary constrains the PWQ function.

    Pairs sharing a ray always count.  Pairs meeting only at the origin count
    when C is wide, because {x | Cx = 0} = ker C is then nontrivial.
    """
    if not p.validated:
        raise PreconditionError("partition must be validated")
    if n > p.m:
        return list(itertools.combinations(range(p.N), 2))
    return list(p.adjacent_pairs)


# -- evaluation -----------------------------------------------------------------------


@dataclass
class Evaluation:
    value: float
    regions: list
    spread: float


def evaluate(pwq: PwqFunction, p: SimplicialConicPartition, x,
             prof: ToleranceProfile = DEFAULT_PROFILE) -> Evaluation:
    """V(x) from the lowest-index matching region, plus the spread over all matches."""
    x = np.asarray(x, dtype=float).ravel()
    regions = locate(p, pwq.C @ x, prof)
    if not regions:
        raise OutOfDomainError(f"Cx = {(pwq.C @ x).tolist()} lies outside the partition", state=x)
    vals = [float(x @ pwq.P[i] @ x) for i in regions]
    return Evaluation(vals[0], regions, max(vals) - min(vals))


# -- state transformation -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransformedPwq:
    """P̄_i = T^{-T} P_i T^{-1} with T = [C; C_perp^T], split by (z, x̂)."""

    T: np.ndarray
    T_inv: np.ndarray
    C_perp: np.ndarray
    P11: tuple
    P21: tuple
    P22: tuple

    @property
    def m(self) -> int:
        return self.T.shape[0] - self.C_perp.shape[1]

    def full(self, i) -> np.ndarray:
        return np.block([[self.P11[i], self.P21[i].T], [self.P21[i], self.P22[i]]])


def transform(pwq: PwqFunction, prof: ToleranceProfile = DEFAULT_PROFILE) -> TransformedPwq:
    C = pwq.C
    m, n = C.shape
    C_perp = kernel_basis(C, prof).columns
    T = np.vstack([C, C_perp.T])
    if rank_tol(T, prof) != n:
        raise InvalidInputError("C is rank deficient")
    T_inv = np.linalg.inv(T)
    P11, P21, P22 = [], [], []
    for Pi in pwq.P:
        Pb = sym(T_inv.T @ Pi @ T_inv)
        P11.append(Pb[:m, :m])
        P21.append(Pb[m:, :m])
        P22.append(Pb[m:, m:])
    return TransformedPwq(T, T_inv, C_perp, tuple(P11), tuple(P21), tuple(P22))


# -- reports --------------------------------------------------------------------------


@dataclass
class PairResult:
    i: int
    j: int
    residuals: dict
    value: Optional[np.ndarray] = None

    @property
    def worst(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self) -> dict:
        out = {"i": self.i + 1, "j": self.j + 1, "residuals": dict(self.residuals)}
        if self.value is not None:
            out["value"] = np.asarray(self.value).tolist()
        return out


@dataclass
class ContinuityReport:
    """Per-pair normalised residuals; the verdict is true iff all are within tolerance."""

    condition: str
    pairs: list
    tol: float
    feasible: Optional[bool] = None

    @property
    def worst_pair(self) -> Optional[PairResult]:
        return max(self.pairs, key=lambda pr: pr.worst, default=None)

    @property
    def worst_residual(self) -> float:
        wp = self.worst_pair
        return 0.0 if wp is None else wp.worst

    @property
    def verdict(self) -> bool:
        if self.feasible is not None:
            return self.feasible
        return self.worst_residual <= self.tol

    def to_dict(self) -> dict:
        wp = self.worst_pair
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "tol": self.tol,
            "worst_residual": self.worst_residual,
            "worst_pair": None if wp is None or wp.worst <= self.tol else [wp.i + 1, wp.j + 1],
            "pairs": [pr.to_dict() for pr in self.pairs],
        }


# -- ray-pair conditions --------------------------------------------------------------


def check_ray_pairs(pwq: PwqFunction, p: SimplicialConicPartition, i: int, j: int,
                    prof: ToleranceProfile = DEFAULT_PROFILE,
                    tp: Optional[TransformedPwq] = None) -> PairResult:
    """Raw residuals on shared rays: max |r_a^T ΔP̄11 r_b|, max ||ΔP̄21 r||, ||ΔP̄22||.

    ``residuals['max']`` is the largest of the three divided by
    max(1, ||P_i||_F + ||P_j||_F).
    """
    _check_sizes(pwq, p)
    tp = transform(pwq, prof) if tp is None else tp
    Z = shared_boundary(p, i, j).Z
    d11 = tp.P11[i] - tp.P11[j]
    d21 = tp.P21[i] - tp.P21[j]
    d22 = tp.P22[i] - tp.P22[j]
    r11 = float(np.max(np.abs(Z.T @ d11 @ Z))) if Z.shape[1] else 0.0
    r21 = float(np.max(np.linalg.norm(d21 @ Z, axis=0))) if Z.shape[1] and d21.size else 0.0
    r22 = float(np.linalg.norm(d22)) if d22.size else 0.0
    s = scale_of(pwq.P[i], pwq.P[j])
    return PairResult(i, j, {"ray11": r11, "ray21": r21, "block22": r22,
                             "max": max(r11, r21, r22) / s})


def check_rays(pwq: PwqFunction, p: SimplicialConicPartition,
               prof: ToleranceProfile = DEFAULT_PROFILE) -> ContinuityReport:
    _check_sizes(pwq, p)
    tp = transform(pwq, prof)
    pairs = []
    for i, j in constrained_pairs(p, pwq.n):
        pr = check_ray_pairs(pwq, p, i, j, prof, tp)
        pairs.append(PairResult(i, j, {"rays": pr.residuals["max"]}))
    return ContinuityReport("rays", pairs, prof.residual_tol)


# -- subspace condition ---------------------------------------------------------------


def boundary_basis(pwq: PwqFunction, p: SimplicialConicPartition, i: int, j: int,
                   tp: Optional[TransformedPwq] = None) -> np.ndarray:
    """W_ij = T^{-1} blkdiag(Z_ij, I); reduces to C^{-1} Z_ij for square C."""
    Z = shared_boundary(p, i, j).Z
    n, m = pwq.n, pwq.m
    if n == m:
        return np.linalg.solve(pwq.C, Z)
    tp = transform(pwq) if tp is None else tp
    k = Z.shape[1]
    blk = np.zeros((n, k + n - m))
    blk[:m, :k] = Z
    blk[m:, k:] = np.eye(n - m)
    return tp.T_inv @ blk


def check_subspace(pwq: PwqFunction, p: SimplicialConicPartition,
                   prof: ToleranceProfile = DEFAULT_PROFILE) -> ContinuityReport:
    """Report W_ij^T (P_i - P_j) W_ij (signed, in ``value``) and its normalised norm per pair."""
    _check_sizes(pwq, p)
    tp = transform(pwq, prof) if pwq.n > pwq.m else None
    pairs = []
    for i, j in constrained_pairs(p, pwq.n):
        W = boundary_basis(pwq, p, i, j, tp)
        val = W.T @ (pwq.P[i] - pwq.P[j]) @ W
        res = float(np.linalg.norm(val)) / scale_of(pwq.P[i], pwq.P[j]) if val.size else 0.0
        pairs.append(PairResult(i, j, {"t3": res}, val))
    return ContinuityReport("t3", pairs, prof.residual_tol)


# -- Φ parametrisation ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhiParam:
    """Φ = [[Φ11, Φ21^T], [Φ21, Φ22]] with F_i = [E_i R_i^{-1} C; V].

    ``v_mat`` is None when C is square (F_i = E_i R_i^{-1} C).  ``defined_mask``
    marks the Φ11 entries pinned by at least one cone; the others are free and
    set to zero.
    """

    phi11: np.ndarray
    phi21: np.ndarray
    phi22: np.ndarray
    v_mat: Optional[np.ndarray]
    defined_mask: np.ndarray

    @property
    def full(self) -> np.ndarray:
        if self.v_mat is None:
            return self.phi11
        return np.block([[self.phi11, self.phi21.T], [self.phi21, self.phi22]])

    def to_dict(self) -> dict:
        return {
            "phi": self.full.tolist(),
            "phi11": self.phi11.tolist(),
            "phi21": self.phi21.tolist(),
            "phi22": self.phi22.tolist(),
            "v_matrix": None if self.v_mat is None else self.v_mat.tolist(),
            "defined_mask": self.defined_mask.astype(int).tolist(),
        }


@dataclass
class PhiInfeasible:
    worst_pair: tuple
    spread: float
    entry: str

    feasible = False

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        return {"feasible": False, "worst_pair": [self.worst_pair[0] + 1, self.worst_pair[1] + 1],
                "spread": self.spread, "entry": self.entry}


def continuity_matrices(p: SimplicialConicPartition, C, v_mat=None) -> list:
    """F_i = [E_i R_i^{-1} C; V] (V omitted when None)."""
    C = np.asarray(C, dtype=float)
    Fs = []
    for i in range(p.N):
        top = p.E(i) @ p.cones[i].R_inv @ C
        Fs.append(top if v_mat is None else np.vstack([top, v_mat]))
    return Fs


def resolve_v_matrix(C, v_mat: Union[None, str, np.ndarray] = "cperp",
                     prof: ToleranceProfile = DEFAULT_PROFILE) -> Optional[np.ndarray]:
    C = np.asarray(C, dtype=float)
    m, n = C.shape
    if isinstance(v_mat, str):
        if v_mat == "cperp":
            if m == n:
                return None
            return kernel_basis(C, prof).columns.T
        if v_mat == "identity":
            return np.eye(n)
        raise InvalidInputError(f"unknown V matrix choice {v_mat!r}")
    if v_mat is None:
        return None if m == n else kernel_basis(C, prof).columns.T
    V = as_matrix(v_mat, "V")
    if V.shape[1] != n:
        raise InvalidInputError(f"V must have {n} columns")
    return V


def materialize_from_phi(phi: PhiParam, p: SimplicialConicPartition, C) -> PwqFunction:
    C = as_matrix(C, "C")
    if C.shape[0] != p.m:
        raise InvalidInputError("C rows do not match the partition dimension")
    F = continuity_matrices(p, C, phi.v_mat)
    Phi = phi.full
    if Phi.shape[0] != F[0].shape[0]:
        raise InvalidInputError(f"Φ is {Phi.shape}, F_i has {F[0].shape[0]} rows")
    return PwqFunction(C, tuple(sym(Fi.T @ Phi @ Fi) for Fi in F))


def synthesize_phi(pwq: PwqFunction, p: SimplicialConicPartition,
                   v_mat: Union[None, str, np.ndarray] = "cperp",
                   prof: ToleranceProfile = DEFAULT_PROFILE):
    """Recover Φ from a continuous PWQ function.

    Φ11[p, q] = r_p^T P̄11_i r_q for rays p, q of a common cone i, Φ21[:, p] =
    P̄21_i r_p, Φ22 = P̄22_i.  Values pinned by several cones must agree; the
    largest disagreement decides infeasibility.  Agreeing values are averaged.
    A general V is handled through X with X V = C_perp^T.
    """
    _check_sizes(pwq, p)
    m, n, r = pwq.m, pwq.n, p.r
    V = resolve_v_matrix(pwq.C, v_mat, prof)
    if V is not None and rank_tol(np.vstack([pwq.C, V]), prof) != n:
        raise InvalidInputError("[C; V] must have full column rank")
    tp = transform(pwq, prof)

    pins11 = {}
    pins21 = {}
    for i in range(p.N):
        Ri = p.R(i)
        M = Ri.T @ tp.P11[i] @ Ri
        B = tp.P21[i] @ Ri
        for a, (ca, sa) in enumerate(p.cone_rays[i]):
            pins21.setdefault(ca, []).append((i, sa * B[:, a]))
            for b, (cb, sb) in enumerate(p.cone_rays[i]):
                if ca <= cb:
                    pins11.setdefault((ca, cb), []).append((i, sa * sb * M[a, b]))

    worst = (0.0, None, "")

    def track(entries, label):
        nonlocal worst
        for (i, vi), (j, vj) in itertools.combinations(entries, 2):
            gap = float(np.max(np.abs(np.atleast_1d(vi - vj)))) if np.size(vi) else 0.0
            gap /= scale_of(pwq.P[i], pwq.P[j])
            if gap > worst[0]:
                worst = (gap, (min(i, j), max(i, j)), label)

    phi11 = np.zeros((r, r))
    mask = np.zeros((r, r), dtype=bool)
    for (a, b), entries in pins11.items():
        track(entries, f"phi11[{a + 1},{b + 1}]")
        val = float(np.mean([v for _, v in entries]))
        phi11[a, b] = phi11[b, a] = val
        mask[a, b] = mask[b, a] = True
    phi21 = np.zeros((n - m, r))
    for a, entries in pins21.items():
        track(entries, f"phi21[:,{a + 1}]")
        phi21[:, a] = np.mean([v for _, v in entries], axis=0)
    if n > m:
        track(list(enumerate(tp.P22)), "phi22")
    phi22 = np.mean(tp.P22, axis=0) if n > m else np.zeros((0, 0))

    if worst[0] > prof.residual_tol:
        return PhiInfeasible(worst[1], worst[0], worst[2])

    if V is not None:
        X = tp.C_perp.T @ pseudoinverse(V, prof)
        phi21 = X.T @ phi21
        phi22 = sym(X.T @ phi22 @ X)
    phi = PhiParam(phi11, phi21, phi22, V, mask)

    rebuilt = materialize_from_phi(phi, p, pwq.C)
    for i in range(p.N):
        err = np.linalg.norm(rebuilt.P[i] - pwq.P[i]) / scale_of(pwq.P[i])
        if err > max(prof.residual_tol, 1e-9):
            raise NumericalInconsistencyError(
                f"Φ reproduces P_{i + 1} only to {err:.3g} although pinned values agree")
    return phi


def random_phi(p: SimplicialConicPartition, C, rng: np.random.Generator,
               v_mat: Union[None, str, np.ndarray] = "cperp") -> PhiParam:
    """Symmetric Gaussian Φ of the size implied by (p, C, V)."""
    V = resolve_v_matrix(C, v_mat)
    r = p.r
    q = 0 if V is None else V.shape[0]
    S = rng.normal(size=(r + q, r + q))
    S = sym(S)
    return PhiParam(S[:r, :r], S[r:, :r], S[r:, r:], V, np.ones((r, r), dtype=bool))


# -- Γ multipliers --------------------------------------------------------------------


@dataclass
class GammaSet:
    """Γ_ij per ordered pair with P_i - P_j = (H_ij C)^T Γ_ij + Γ_ij^T (H_ij C).

    Only i < j is stored; Γ_ji = -Γ_ij.
    """

    gammas: dict = field(default_factory=dict)

    feasible = True

    def __bool__(self):
        return True

    def get(self, i, j):
        if (i, j) in self.gammas:
            return self.gammas[(i, j)]
        if (j, i) in self.gammas:
            return -self.gammas[(j, i)]
        raise InvalidInputError(f"no multiplier for pair ({i + 1}, {j + 1})")

    def to_dict(self) -> dict:
        return {"feasible": True,
                "gammas": [{"i": i + 1, "j": j + 1, "gamma": np.asarray(G).tolist()}
                           for (i, j), G in sorted(self.gammas.items())]}

    @classmethod
    def from_dict(cls, data: dict) -> "GammaSet":
        try:
            items = data["gammas"]
            return cls({(int(d["i"]) - 1, int(d["j"]) - 1): as_matrix(d["gamma"], "gamma")
                        for d in items})
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"gamma: malformed ({exc})") from None


@dataclass
class GammaInfeasible:
    pair: tuple
    reason: str
    diagnosis: object = None

    feasible = False

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        out = {"feasible": False, "worst_pair": [self.pair[0] + 1, self.pair[1] + 1],
               "reason": self.reason}
        if self.diagnosis is not None:
            out["diagnosis"] = self.diagnosis.to_dict()
        return out


def synthesize_gamma(pwq: PwqFunction, p: SimplicialConicPartition,
                     prof: ToleranceProfile = DEFAULT_PROFILE):
    """One-sided projection per constrained pair with U = H_ij C, Q = P_i - P_j."""
    _check_sizes(pwq, p)
    out = {}
    for i, j in constrained_pairs(p, pwq.n):
        U = shared_boundary(p, i, j).H @ pwq.C
        Q = pwq.P[i] - pwq.P[j]
        res = solve_onesided(U, Q, prof, scale=scale_of(pwq.P[i], pwq.P[j]))
        if not res.feasible:
            return GammaInfeasible((i, j), res.reason, res.diagnosis)
        out[(i, j)] = -res.X
    return GammaSet(out)


def check_gamma(pwq: PwqFunction, p: SimplicialConicPartition, g: GammaSet,
                prof: ToleranceProfile = DEFAULT_PROFILE) -> ContinuityReport:
    _check_sizes(pwq, p)
    pairs = []
    for i, j in constrained_pairs(p, pwq.n):
        U = shared_boundary(p, i, j).H @ pwq.C
        G = as_matrix(g.get(i, j), "gamma")
        if G.shape != (U.shape[0], pwq.n):
            raise InvalidInputError(
                f"Γ for pair ({i + 1}, {j + 1}) has shape {G.shape}, expected {(U.shape[0], pwq.n)}")
        lhs = pwq.P[i] - pwq.P[j] - U.T @ G - G.T @ U
        res = float(np.linalg.norm(lhs)) / scale_of(pwq.P[i], pwq.P[j])
        pairs.append(PairResult(i, j, {"t5": res}, lhs))
    return ContinuityReport("t5", pairs, prof.residual_tol)


def gamma_report(pwq: PwqFunction, p: SimplicialConicPartition,
                 prof: ToleranceProfile = DEFAULT_PROFILE) -> ContinuityReport:
    """Multiplier route as a report: synthesise, then re-substitute."""
    g = synthesize_gamma(pwq, p, prof)
    if not g:
        pr = PairResult(g.pair[0], g.pair[1], {"t5": float("inf")})
        return ContinuityReport("t5", [pr], prof.residual_tol, feasible=False)
    return check_gamma(pwq, p, g, prof)


# -- cross validation -----------------------------------------------------------------

CONDITIONS = ("rays", "t3", "t5", "t4")


def verdicts(pwq: PwqFunction, p: SimplicialConicPartition,
             prof: ToleranceProfile = DEFAULT_PROFILE) -> dict:
    """Boolean verdict of each of the four routes."""
    phi = synthesize_phi(pwq, p, "cperp", prof)
    return {
        "rays": check_rays(pwq, p, prof).verdict,
        "t3": check_subspace(pwq, p, prof).verdict,
        "t5": bool(synthesize_gamma(pwq, p, prof)),
        "t4": bool(phi),
    }


def boundary_bump(pwq: PwqFunction, p: SimplicialConicPartition, rng: np.random.Generator,
                  eps: float):
    """Random symmetric perturbation of one P_i that breaks agreement on a boundary.

    Returns (perturbed pwq, pair).
    """
    pairs = [pr for pr in constrained_pairs(p, pwq.n)
             if boundary_basis(pwq, p, *pr).shape[1] > 0]
    if not pairs:
        raise PreconditionError("partition has no boundary to perturb")
    i, j = pairs[rng.integers(len(pairs))]
    W = boundary_basis(pwq, p, i, j)
    n = pwq.n
    while True:
        B = sym(rng.normal(size=(n, n)))
        B /= np.linalg.norm(B)
        if np.linalg.norm(W.T @ B @ W) >= 0.1 * np.linalg.norm(W) ** 2 / n:
            break
    target = i if rng.random() < 0.5 else j
    P = list(pwq.P)
    P[target] = P[target] + eps * scale_of(P[target]) * B
    return PwqFunction(pwq.C, tuple(P)), (i, j)


@dataclass
class EquivalenceReport:
    trials: int
    seed: int
    records: list

    @property
    def agreement(self) -> int:
        """Trials where every route matched the expected verdict, for both branches."""
        return sum(1 for rec in self.records if rec["agree"])

    def agreement_matrix(self) -> list:
        """Pairwise verdict agreement counts over all 2 * trials cases."""
        k = len(CONDITIONS)
        mat = [[0] * k for _ in range(k)]
        for rec in self.records:
            for branch in ("continuous", "perturbed"):
                v = rec[branch]
                for a in range(k):
                    for b in range(k):
                        mat[a][b] += int(v[CONDITIONS[a]] == v[CONDITIONS[b]])
        return mat

    @property
    def ok(self) -> bool:
        return self.agreement == self.trials

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "agreement": self.agreement,
            "conditions": list(CONDITIONS),
            "agreement_matrix": self.agreement_matrix(),
            "records": self.records,
        }


def _one_trial(p, C, seed_seq, prof, eps):
    rng = np.random.default_rng(seed_seq)
    phi = random_phi(p, C, rng)
    pwq = materialize_from_phi(phi, p, C)
    cont = verdicts(pwq, p, prof)
    bumped, pair = boundary_bump(pwq, p, rng, eps)
    pert = verdicts(bumped, p, prof)
    agree = all(cont.values()) and not any(pert.values())
    return {"continuous": cont, "perturbed": pert, "pair": [pair[0] + 1, pair[1] + 1],
            "agree": agree}


def cross_validate(p: SimplicialConicPartition, C, trials: int = 100, seed: int = 0,
                   prof: ToleranceProfile = DEFAULT_PROFILE, eps: float = 1e-3,
                   workers: int = 1) -> EquivalenceReport:
    """Random continuous PWQ functions (via Φ) and boundary-breaking bumps of them.

    Every route must accept the former and reject the latter.  Trials use
    independent child seeds, so the result does not depend on ``workers``.
    """
    C = as_matrix(C, "C")
    if C.shape[0] != p.m:
        raise InvalidInputError("C rows do not match the partition dimension")
    children = np.random.SeedSequence(seed).spawn(trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda s: _one_trial(p, C, s, prof, eps), children))
    else:
        records = [_one_trial(p, C, s, prof, eps) for s in children]
    return EquivalenceReport(trials, seed, records)
