"""Piecewise quadratic Lyapunov certificates for conewise linear systems.

For dx/dt = A_i x on Cx ∈ S_i the certificate consists of P_i and entrywise
nonnegative symmetric multipliers W_i, U_i with

    P_i - C^T R_i^{-T} W_i R_i^{-1} C               ⪰  eps I
    A_i^T P_i + P_i A_i + C^T R_i^{-T} U_i R_i^{-1} C  ⪯ -eps I

and continuity imposed either through P_i = F_i^T Φ F_i (``method="phi"``) or
through the boundary equalities W_ij^T (P_i - P_j) W_ij = 0 (``method="equality"``).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backends import Affine, ProblemBuilder, SolverBackend, default_backend
from .cones import (SimplicialConicPartition, antipodal_reduction, cone_samples,
                    partition_from_dict)
from .continuity import (PhiParam, PwqFunction, boundary_basis, check_subspace,
                         constrained_pairs, continuity_matrices, resolve_v_matrix,
                         transform)
from .errors import InvalidInputError, SolverError
from .numerics import (DEFAULT_PROFILE, ToleranceProfile, as_matrix, kernel_basis,
                       pseudoinverse, rank_tol, sym)

log = logging.getLogger(__name__)

SLIDING_MODE_WARNING = (
    "These conditions certify decay along classical solutions only; "
    "sliding (boundary-confined) motions are not covered.")


@dataclass(frozen=True, eq=False)
class ConewiseLinearSystem:
    A: tuple
    C: np.ndarray
    partition: SimplicialConicPartition

    def __post_init__(self):
        C = as_matrix(self.C, "C")
        m, n = C.shape
        if m != self.partition.m:
            raise InvalidInputError(f"C has {m} rows, partition lives in R^{self.partition.m}")
        if m > n or rank_tol(C) != m:
            raise InvalidInputError("C must have full row rank")
        A = tuple(as_matrix(Ai, f"A[{k}]") for k, Ai in enumerate(self.A))
        if len(A) != self.partition.N:
            raise InvalidInputError(f"{len(A)} dynamics matrices for {self.partition.N} regions")
        for k, Ai in enumerate(A):
            if Ai.shape != (n, n):
                raise InvalidInputError(f"A[{k}] has shape {Ai.shape}, expected {(n, n)}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def N(self) -> int:
        return self.partition.N

    def scaled(self, beta: float) -> "ConewiseLinearSystem":
        return ConewiseLinearSystem(tuple(beta * Ai for Ai in self.A), self.C, self.partition)

    def to_dict(self) -> dict:
        return {"A": [Ai.tolist() for Ai in self.A], "C": self.C.tolist(),
                "partition": self.partition.to_dict()}

    @classmethod
    def from_dict(cls, data: dict, prof: ToleranceProfile = DEFAULT_PROFILE):
        try:
            A = data["A"]
            part = data["partition"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"system: malformed ({exc})") from None
        partition = partition_from_dict(part, prof)
        C = data.get("C")
        if C is None:
            C = np.eye(partition.m)
        return cls(tuple(A), np.array(C, dtype=float), partition)


@dataclass(eq=False)
class StabilityCertificate:
    P: tuple
    W: tuple
    U: tuple
    method: str
    eps: float
    margins: list
    phi: Optional[PhiParam] = None
    status: str = ""
    solver: str = ""
    symmetric_pairs: bool = False
    continuity_residual: float = 0.0
    continuity_value: float = 0.0
    warning: str = SLIDING_MODE_WARNING

    @property
    def min_margin(self) -> float:
        return min(min(mg["positivity"], mg["decrease"]) for mg in self.margins)

    def pwq(self, C) -> PwqFunction:
        return PwqFunction(C, self.P)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "eps": self.eps,
            "status": self.status,
            "solver": self.solver,
            "symmetric_pairs": self.symmetric_pairs,
            "P": [Pk.tolist() for Pk in self.P],
            "W": [Wk.tolist() for Wk in self.W],
            "U": [Uk.tolist() for Uk in self.U],
            "phi": None if self.phi is None else self.phi.to_dict(),
            "margins": self.margins,
            "continuity_residual": self.continuity_residual,
            "continuity_value": self.continuity_value,
            "warning": self.warning,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityCertificate":
        try:
            phi = None
            if data.get("phi"):
                d = data["phi"]
                phi = PhiParam(np.array(d["phi11"], dtype=float),
                               np.array(d["phi21"], dtype=float).reshape(-1, len(d["phi11"])),
                               np.array(d["phi22"], dtype=float),
                               None if d.get("v_matrix") is None else np.array(d["v_matrix"], dtype=float),
                               np.array(d["defined_mask"], dtype=bool))
            return cls(
                P=tuple(as_matrix(Pk, "P") for Pk in data["P"]),
                W=tuple(as_matrix(Wk, "W") for Wk in data["W"]),
                U=tuple(as_matrix(Uk, "U") for Uk in data["U"]),
                method=data.get("method", ""),
                eps=float(data.get("eps", 0.0)),
                margins=list(data.get("margins", [])),
                phi=phi,
                status=data.get("status", ""),
                solver=data.get("solver", ""),
                symmetric_pairs=bool(data.get("symmetric_pairs", False)),
                continuity_residual=float(data.get("continuity_residual", 0.0)),
                continuity_value=float(data.get("continuity_value", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"certificate: malformed ({exc})") from None


@dataclass
class Infeasible:
    status: str
    dual_status: str
    solver: str = ""
    duals: dict = field(default_factory=dict)

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        return {"feasible": False, "status": self.status, "dual_status": self.dual_status,
                "solver": self.solver}


def _copositive_term(sysm: ConewiseLinearSystem, i: int, M):
    """C^T R_i^{-T} M R_i^{-1} C for a constant or affine M."""
    L = sysm.partition.cones[i].R_inv @ sysm.C
    return L.T @ M @ L


def lmi_margins(sysm: ConewiseLinearSystem, P, W, U) -> list:
    """Smallest eigenvalue of each LMI (positivity, decrease) per region."""
    out = []
    for i in range(sysm.N):
        pos = sym(P[i] - _copositive_term(sysm, i, W[i]))
        dec = -sym(sysm.A[i].T @ P[i] + P[i] @ sysm.A[i] + _copositive_term(sysm, i, U[i]))
        out.append({"positivity": float(np.linalg.eigvalsh(pos)[0]),
                    "decrease": float(np.linalg.eigvalsh(dec)[0])})
    return out


def synthesize(sysm: ConewiseLinearSystem, method: str = "phi", eps: float = 1e-6,
               backend: Optional[SolverBackend] = None, symmetric_pairs: bool = False,
               objective: str = "feasibility", v_mat="cperp",
               prof: ToleranceProfile = DEFAULT_PROFILE):
    """Search for a continuous PWQ Lyapunov certificate.

    Returns a :class:`StabilityCertificate`, or :class:`Infeasible` when the
    backend reports infeasibility.  ``symmetric_pairs`` ties region i + N/2 to
    region i (the partition must be centrally symmetric).
    """
    if method not in ("phi", "equality"):
        raise InvalidInputError(f"unknown method {method!r}")
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    if objective not in ("feasibility", "trace"):
        raise InvalidInputError(f"unknown objective {objective!r}")
    backend = default_backend() if backend is None else backend
    part = sysm.partition
    N, n, m = sysm.N, sysm.n, sysm.m
    half = N // 2
    if symmetric_pairs:
        reduced = antipodal_reduction(part)
        for i in range(half):
            if not np.allclose(sysm.A[i], sysm.A[i + half], atol=1e-12):
                raise InvalidInputError(
                    f"symmetric pairs: A_{i + 1 + half} differs from A_{i + 1}")
    else:
        reduced = part

    bld = ProblemBuilder()
    phi_var = None
    if method == "phi":
        V = resolve_v_matrix(sysm.C, v_mat, prof)
        F = continuity_matrices(reduced, sysm.C, V)
        phi_var = bld.sym_matrix(F[0].shape[0])
        P = [F[i].T @ phi_var @ F[i] for i in range(N)]
    else:
        V = None
        own = [bld.sym_matrix(n) for _ in range(half if symmetric_pairs else N)]
        P = [own[i % half] if symmetric_pairs else own[i] for i in range(N)]
        shape_only = PwqFunction(sysm.C, tuple(np.eye(n) for _ in range(N)))
        tp = transform(shape_only, prof) if n > m else None
        for i, j in constrained_pairs(part, n):
            Wij = boundary_basis(shape_only, part, i, j, tp)
            if Wij.shape[1] and not (symmetric_pairs and i % half == j % half):
                bld.add_zero(Wij.T @ (P[i] - P[j]) @ Wij, symmetric=True)

    W = [bld.sym_matrix(m, nonneg=True) for _ in range(N)]
    U = [bld.sym_matrix(m, nonneg=True) for _ in range(N)]
    I = np.eye(n)
    for i in range(N):
        bld.add_psd(P[i] - _copositive_term(sysm, i, W[i]) - eps * I, f"positivity[{i + 1}]")
        Ai = sysm.A[i]
        lie = Ai.T @ P[i] + P[i] @ Ai
        bld.add_psd(-(lie + _copositive_term(sysm, i, U[i])) - eps * I, f"decrease[{i + 1}]")
    if objective == "trace":
        tr = Affine(np.zeros((1, 1)))
        for Pi in (P[:half] if symmetric_pairs else P):
            tr = tr + Affine(np.trace(Pi.const), {k: np.array([[np.trace(M)]])
                                                  for k, M in Pi.coef.items()})
        bld.minimise(tr)

    problem = bld.build()
    log.debug("synthesize: %d variables, %d PSD blocks, %d equalities",
              problem.n_vars, len(problem.psd), problem.A_eq.shape[0])
    result = backend.solve(problem)
    if result.status == "infeasible":
        return Infeasible("infeasible", result.raw_status, result.solver, result.duals)
    if result.status != "optimal":
        raise SolverError(f"backend {result.solver or backend.name} returned {result.raw_status}",
                          status=result.raw_status)

    y = result.y.copy()
    if problem.nonneg.size:
        y[problem.nonneg] = np.maximum(y[problem.nonneg], 0.0)
    Pv = tuple(sym(Pi.value(y)) for Pi in P)
    Wv = tuple(sym(Wi.value(y)) for Wi in W)
    Uv = tuple(sym(Ui.value(y)) for Ui in U)
    phi = None
    if phi_var is not None:
        Phi = sym(phi_var.value(y))
        r = reduced.r
        phi = PhiParam(Phi[:r, :r], Phi[r:, :r], Phi[r:, r:], V, _pinned_mask(reduced))
    cont = check_subspace(PwqFunction(sysm.C, Pv), part, prof)
    worst = cont.worst_pair
    value = 0.0 if worst is None or worst.value is None or not worst.value.size else \
        float(np.max(np.abs(worst.value)))
    return StabilityCertificate(
        P=Pv, W=Wv, U=Uv, method=method, eps=eps, margins=lmi_margins(sysm, Pv, Wv, Uv),
        phi=phi, status=result.raw_status, solver=result.solver or backend.name,
        symmetric_pairs=symmetric_pairs, continuity_residual=cont.worst_residual,
        continuity_value=value)


def _pinned_mask(p: SimplicialConicPartition) -> np.ndarray:
    mask = np.zeros((p.r, p.r), dtype=bool)
    for members in p.cone_rays:
        cols = [c for c, _ in members]
        mask[np.ix_(cols, cols)] = True
    return mask


@dataclass
class VerificationReport:
    lmi_ok: bool
    margins: list
    sampling_ok: bool
    sample_failures: list
    worst_positivity: float
    worst_decrease: float
    continuity_ok: bool
    continuity_residual: float
    samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.lmi_ok and self.sampling_ok and self.continuity_ok

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "lmi_ok": self.lmi_ok,
            "margins": self.margins,
            "sampling_ok": self.sampling_ok,
            "sample_failures": self.sample_failures,
            "worst_positivity": self.worst_positivity,
            "worst_decrease": self.worst_decrease,
            "continuity_ok": self.continuity_ok,
            "continuity_residual": self.continuity_residual,
            "samples": self.samples,
            "seed": self.seed,
        }


def verify(sysm: ConewiseLinearSystem, cert: StabilityCertificate, samples: int = 1000,
           seed: int = 0, prof: ToleranceProfile = DEFAULT_PROFILE,
           continuity_tol: float = 1e-6) -> VerificationReport:
    """Solver-free check of a certificate.

    (a) eigenvalue margins of both LMIs with the stored multipliers, (b) sign of
    x^T P_i x and x^T (A_i^T P_i + P_i A_i) x at sampled points with Cx in S_i,
    (c) the subspace continuity residual against ``continuity_tol``.
    Sampling statistics are normalised by |x|^2.
    """
    N, n = sysm.N, sysm.n
    if len(cert.P) != N or len(cert.W) != N or len(cert.U) != N:
        raise InvalidInputError("certificate does not match the number of regions")
    if any(Pk.shape != (n, n) for Pk in cert.P):
        raise InvalidInputError("certificate matrices do not match the state dimension")
    margins = lmi_margins(sysm, cert.P, cert.W, cert.U)
    lmi_ok = all(mg["positivity"] > 0 and mg["decrease"] > 0 for mg in margins)
    multipliers_ok = all(np.all(M >= -1e-12) and np.allclose(M, M.T, atol=1e-9)
                         for M in cert.W + cert.U)
    lmi_ok = lmi_ok and multipliers_ok

    rng = np.random.default_rng(seed)
    C = sysm.C
    Cp = pseudoinverse(C, prof)
    Cperp = kernel_basis(C, prof).columns
    failures = []
    worst_pos, worst_dec = np.inf, -np.inf
    for i, cone in enumerate(sysm.partition.cones):
        Z = cone_samples(cone, rng, samples)
        X = Cp @ Z
        if Cperp.shape[1]:
            X = X + Cperp @ rng.normal(size=(Cperp.shape[1], samples))
        nrm = np.einsum("ij,ij->j", X, X)
        keep = nrm > 0
        X, nrm = X[:, keep], nrm[keep]
        Pi = cert.P[i]
        Li = sysm.A[i].T @ Pi + Pi @ sysm.A[i]
        v = np.einsum("ij,ik,kj->j", X, Pi, X) / nrm
        d = np.einsum("ij,ik,kj->j", X, Li, X) / nrm
        bad_pos, bad_dec = int(np.sum(v <= 0)), int(np.sum(d >= 0))
        if bad_pos or bad_dec:
            failures.append({"region": i + 1, "positivity": bad_pos, "decrease": bad_dec})
        worst_pos = min(worst_pos, float(v.min()) if v.size else np.inf)
        worst_dec = max(worst_dec, float(d.max()) if d.size else -np.inf)

    cont = check_subspace(PwqFunction(C, cert.P), sysm.partition,
                          ToleranceProfile(prof.rank_tol, continuity_tol))
    return VerificationReport(lmi_ok, margins, not failures, failures, worst_pos, worst_dec,
                              cont.verdict, cont.worst_residual, samples, seed)


def unrelaxed(cert: StabilityCertificate) -> StabilityCertificate:
    """Copy of ``cert`` with all multipliers set to zero."""
    zeros_w = tuple(np.zeros_like(Wk) for Wk in cert.W)
    zeros_u = tuple(np.zeros_like(Uk) for Uk in cert.U)
    return StabilityCertificate(cert.P, zeros_w, zeros_u, cert.method, cert.eps, [],
                                cert.phi, cert.status, cert.solver, cert.symmetric_pairs,
                                cert.continuity_residual, cert.continuity_value)
