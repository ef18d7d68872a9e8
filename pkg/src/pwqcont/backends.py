"""Solver-agnostic semidefinite feasibility problems.

A problem is posed over a flat decision vector y:

    minimise    c^T y
    subject to  F0_k + sum_l y_l F_kl  ⪰ 0     (one entry per PSD block k)
                y_l >= 0                      (l in ``nonneg``)
                A_eq y = b_eq

:class:`ProblemBuilder` and :class:`Affine` assemble such problems from
matrix-valued affine expressions.  Backends only need :meth:`SolverBackend.solve`.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, SolverError


class Affine:
    """Matrix-valued affine function  const + sum_l y_l coef[l]."""

    __array_ufunc__ = None  # make ndarray @ Affine dispatch to __rmatmul__

    def __init__(self, const, coef=None):
        self.const = np.atleast_2d(np.asarray(const, dtype=float))
        self.coef = dict(coef or {})

    @property
    def shape(self):
        return self.const.shape

    @classmethod
    def constant(cls, M):
        return cls(M)

    def __add__(self, other):
        if not isinstance(other, Affine):
            return Affine(self.const + other, self.coef)
        coef = dict(self.coef)
        for k, M in other.coef.items():
            coef[k] = coef[k] + M if k in coef else M
        return Affine(self.const + other.const, coef)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, {k: -M for k, M in self.coef.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s: float):
        return Affine(s * self.const, {k: s * M for k, M in self.coef.items()})

    __rmul__ = __mul__

    def __matmul__(self, M):
        M = np.asarray(M, dtype=float)
        return Affine(self.const @ M, {k: C @ M for k, C in self.coef.items()})

    def __rmatmul__(self, M):
        M = np.asarray(M, dtype=float)
        return Affine(M @ self.const, {k: M @ C for k, C in self.coef.items()})

    @property
    def T(self):
        return Affine(self.const.T, {k: C.T for k, C in self.coef.items()})

    def value(self, y) -> np.ndarray:
        out = self.const.copy()
        for k, M in self.coef.items():
            out = out + y[k] * M
        return out


@dataclass
class SdpProblem:
    n_vars: int
    psd: list                     # [(label, F0, Fs)] with Fs of shape (n_vars, s, s)
    nonneg: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    c: np.ndarray


@dataclass
class SdpResult:
    status: str                   # 'optimal' | 'infeasible' | 'error'
    y: Optional[np.ndarray]
    duals: dict = field(default_factory=dict)
    raw_status: str = ""
    solver: str = ""


class ProblemBuilder:
    def __init__(self):
        self.n_vars = 0
        self.nonneg = []
        self.psd = []
        self.eq = []
        self.objective = None

    def scalar(self, nonneg=False) -> int:
        k = self.n_vars
        self.n_vars += 1
        if nonneg:
            self.nonneg.append(k)
        return k

    def sym_matrix(self, s: int, nonneg: bool = False) -> Affine:
        """Symmetric s x s matrix of fresh variables (entrywise >= 0 if ``nonneg``)."""
        coef = {}
        for a in range(s):
            for b in range(a, s):
                k = self.scalar(nonneg)
                E = np.zeros((s, s))
                E[a, b] = E[b, a] = 1.0
                coef[k] = E
        return Affine(np.zeros((s, s)), coef)

    def add_psd(self, expr: Affine, label: str = ""):
        if expr.shape[0] != expr.shape[1]:
            raise InvalidInputError("PSD constraint on a non-square expression")
        self.psd.append((label, 0.5 * (expr + expr.T)))

    def add_zero(self, expr: Affine, symmetric: bool = False):
        r, c = expr.shape
        for a in range(r):
            for b in range(a if symmetric else 0, c):
                row = {k: M[a, b] for k, M in expr.coef.items() if M[a, b] != 0.0}
                self.eq.append((row, -expr.const[a, b]))

    def minimise(self, expr: Affine):
        if expr.shape != (1, 1):
            raise InvalidInputError("objective must be scalar")
        self.objective = expr

    def build(self) -> SdpProblem:
        n = self.n_vars
        psd = []
        for label, expr in self.psd:
            s = expr.shape[0]
            Fs = np.zeros((n, s, s))
            for k, M in expr.coef.items():
                Fs[k] = M
            psd.append((label, expr.const, Fs))
        A = np.zeros((len(self.eq), n))
        b = np.zeros(len(self.eq))
        for r_, (row, rhs) in enumerate(self.eq):
            for k, v in row.items():
                A[r_, k] = v
            b[r_] = rhs
        c = np.zeros(n)
        if self.objective is not None:
            for k, M in self.objective.coef.items():
                c[k] = M[0, 0]
        return SdpProblem(n, psd, np.array(self.nonneg, dtype=int), A, b, c)


class SolverBackend(abc.ABC):
    """Anything that can solve an :class:`SdpProblem`."""

    name = "abstract"

    @abc.abstractmethod
    def solve(self, problem: SdpProblem) -> SdpResult:
        ...


class CvxpyBackend(SolverBackend):
    """cvxpy front end; the conic solver defaults to Clarabel."""

    def __init__(self, solver: str = "CLARABEL", **solver_opts):
        self.solver = solver
        self.solver_opts = solver_opts
        self.name = f"cvxpy/{solver}"

    def solve(self, problem: SdpProblem) -> SdpResult:
        import cvxpy as cp

        n = problem.n_vars
        y = cp.Variable(n)
        cons = []
        tags = []
        for label, F0, Fs in problem.psd:
            s = F0.shape[0]
            S = cp.Variable((s, s), PSD=True)
            iu = np.triu_indices(s)
            lin = Fs[:, iu[0], iu[1]].T              # (#upper, n)
            cons.append(S[iu] == F0[iu] + lin @ y)
            tags.append(label)
        if problem.nonneg.size:
            cons.append(y[problem.nonneg] >= 0)
        if problem.A_eq.shape[0]:
            cons.append(problem.A_eq @ y == problem.b_eq)
        prob = cp.Problem(cp.Minimize(problem.c @ y), cons)
        try:
            prob.solve(solver=self.solver, **self.solver_opts)
        except cp.error.SolverError as exc:
            raise SolverError(f"{self.name} failed: {exc}", status="solver_error") from None
        status = prob.status
        duals = {}
        for tag, con in zip(tags, cons):
            if con.dual_value is not None:
                duals[tag] = np.asarray(con.dual_value)
        if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return SdpResult("optimal", np.asarray(y.value, dtype=float), duals, status, self.name)
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SdpResult("infeasible", None, duals, status, self.name)
        return SdpResult("error", None, duals, str(status), self.name)


def default_backend() -> SolverBackend:
    return CvxpyBackend()
