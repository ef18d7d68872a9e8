"""Simplicial cones, conic partitions and their shared boundaries.

A partition is given by a matrix of distinct rays (columns) and, per cone, ``m``
signed 1-based indices into those columns.  An index ``-p`` stands for the ray
``-r_p``; when ``-r_p`` is itself one of the listed rays it is resolved to that
column, otherwise the extraction matrix carries a ``-1`` entry.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (DegenerateConeError, InvalidInputError, PartitionInvalidError,
                     PreconditionError, UnsupportedDimensionError)
from .numerics import DEFAULT_PROFILE, ToleranceProfile, as_matrix, kernel_basis, rank_tol

ANGULAR_TOL = 1e-9
MAX_VALIDATION_DIM = 4


@dataclass(frozen=True)
class SimplicialCone:
    """pos(R) for a nonsingular m x m ray matrix R with unit columns."""

    R: np.ndarray

    @cached_property
    def R_inv(self) -> np.ndarray:
        return np.linalg.inv(self.R)

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def coordinates(self, z) -> np.ndarray:
        return self.R_inv @ np.asarray(z, dtype=float)

    def contains(self, z, prof: ToleranceProfile = DEFAULT_PROFILE) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(np.all(self.coordinates(z) >= -prof.residual_tol * np.linalg.norm(z)))


@dataclass(frozen=True)
class BoundaryFace:
    i: int
    j: int
    Z: np.ndarray
    H: np.ndarray

    @property
    def k(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True, eq=False)
class SimplicialConicPartition:
    """Validated (or raw) simplicial conic partition of a subset of R^m.

    ``cone_rays[i]`` holds ``(column, sign)`` pairs (0-based columns of
    ``rays``) so that ``R_i[:, a] = sign * rays[:, column]``.
    """

    rays: np.ndarray
    cone_rays: tuple
    validated: bool = False
    cones: tuple = field(init=False, repr=False)
    extraction: tuple = field(init=False, repr=False)

    def __post_init__(self):
        m, r = self.rays.shape
        cones, ext = [], []
        for idx, members in enumerate(self.cone_rays):
            E = np.zeros((r, m))
            for a, (col, sign) in enumerate(members):
                E[col, a] = sign
            R = self.rays @ E
            if rank_tol(R) < m:
                raise DegenerateConeError(f"cone {idx + 1}: ray matrix is singular")
            cones.append(SimplicialCone(R))
            ext.append(E)
        object.__setattr__(self, "cones", tuple(cones))
        object.__setattr__(self, "extraction", tuple(ext))

    @property
    def m(self) -> int:
        return self.rays.shape[0]

    @property
    def r(self) -> int:
        return self.rays.shape[1]

    @property
    def N(self) -> int:
        return len(self.cones)

    def R(self, i) -> np.ndarray:
        return self.cones[i].R

    def E(self, i) -> np.ndarray:
        return self.extraction[i]

    def signed_indices(self) -> list:
        """Cone specification in the JSON convention (signed, 1-based)."""
        return [[int(s) * (c + 1) for c, s in members] for members in self.cone_rays]

    def to_dict(self) -> dict:
        return {"m": self.m, "rays": self.rays.T.tolist(), "cones": self.signed_indices()}

    @cached_property
    def _faces(self) -> dict:
        faces = {}
        for i, j in itertools.combinations(range(self.N), 2):
            faces[(i, j)] = _shared_face(self, i, j)
        return faces

    @cached_property
    def adjacent_pairs(self) -> list:
        """Pairs (i, j), i < j, sharing at least one extremal ray."""
        return [pair for pair, face in self._faces.items() if face.k > 0]


def _parallel_index(u, columns, tol=ANGULAR_TOL):
    """Index of the column positively parallel to unit vector u, or None."""
    if columns.shape[1] == 0:
        return None
    d = np.linalg.norm(columns - u[:, None], axis=0)
    k = int(np.argmin(d))
    return k if d[k] <= tol else None


def build_partition(distinct_rays, cone_ray_indices: Sequence[Sequence[int]],
                    prof: ToleranceProfile = DEFAULT_PROFILE,
                    validate: bool = True) -> SimplicialConicPartition:
    """Build a partition from rays (columns of an m x r matrix) and signed cone index lists.

    Rays are unit-normalised and deduplicated up to positive scaling.  With
    ``validate=True`` the result is checked by :func:`validate_partition` and a
    :class:`PartitionInvalidError` is raised on failure.
    """
    raw = as_matrix(distinct_rays, "rays")
    m, r_in = raw.shape
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0):
        raise InvalidInputError("rays: zero column")
    unit = raw / norms

    canon = np.zeros((m, 0))
    col_of = []
    for p in range(r_in):
        k = _parallel_index(unit[:, p], canon)
        if k is None:
            canon = np.column_stack([canon, unit[:, p]])
            k = canon.shape[1] - 1
        col_of.append(k)

    memberships = []
    for ci, idx_list in enumerate(cone_ray_indices):
        if len(idx_list) != m:
            raise InvalidInputError(f"cone {ci + 1}: expected {m} ray indices, got {len(idx_list)}")
        members = []
        for raw_idx in idx_list:
            raw_idx = int(raw_idx)
            if raw_idx == 0 or abs(raw_idx) > r_in:
                raise InvalidInputError(f"cone {ci + 1}: ray index {raw_idx} out of range 1..{r_in}")
            col = col_of[abs(raw_idx) - 1]
            if raw_idx > 0:
                members.append((col, 1))
                continue
            neg = _parallel_index(-canon[:, col], canon)
            members.append((neg, 1) if neg is not None else (col, -1))
        if len(set(members)) != m:
            raise DegenerateConeError(f"cone {ci + 1}: repeated ray")
        memberships.append(tuple(members))

    part = SimplicialConicPartition(canon, tuple(memberships))
    if not validate:
        return part
    report = validate_partition(part, prof)
    if not report.ok:
        raise PartitionInvalidError(report.summary(), pair=report.first_failure(), report=report)
    return SimplicialConicPartition(canon, tuple(memberships), validated=True)


def partition_from_dict(data: dict, prof: ToleranceProfile = DEFAULT_PROFILE,
                        validate: bool = True) -> SimplicialConicPartition:
    try:
        rays = np.array(data["rays"], dtype=float)
        cones = data["cones"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"partition: malformed ({exc})") from None
    if rays.ndim != 2:
        raise InvalidInputError("partition: 'rays' must be a list of vectors")
    m = int(data.get("m", rays.shape[1]))
    if rays.shape[1] != m:
        raise InvalidInputError(f"partition: rays have dimension {rays.shape[1]}, m = {m}")
    return build_partition(rays.T, cones, prof, validate=validate)


# -- extreme rays of {z | G z >= 0} ---------------------------------------------------


def extreme_rays(G, tol: float = 1e-9) -> np.ndarray:
    """Extreme rays (unit columns) of the pointed cone {z | G z >= 0}.

    Double description: start from the simplicial cone of m independent rows,
    then add the remaining half-spaces one at a time, combining adjacent
    positive/negative ray pairs.  Adjacency uses the algebraic rank test.
    """
    G = as_matrix(G, "G")
    G = G / np.maximum(np.linalg.norm(G, axis=1, keepdims=True), 1e-300)
    k, m = G.shape
    basis_rows = []
    for row in range(k):
        trial = basis_rows + [row]
        if np.linalg.matrix_rank(G[trial], tol=1e-10) == len(trial):
            basis_rows = trial
        if len(basis_rows) == m:
            break
    if len(basis_rows) < m:
        raise InvalidInputError("extreme_rays: cone is not pointed")
    rays = np.linalg.inv(G[basis_rows])
    rays = list((rays / np.linalg.norm(rays, axis=0)).T)
    processed = list(basis_rows)

    for row in range(k):
        if row in basis_rows:
            continue
        a = G[row]
        vals = [float(a @ x) for x in rays]
        pos = [x for x, v in zip(rays, vals) if v > tol]
        zero = [x for x, v in zip(rays, vals) if abs(v) <= tol]
        neg = [(x, v) for x, v in zip(rays, vals) if v < -tol]
        new = pos + zero
        if neg:
            Gp = G[processed]
            for x in pos:
                vx = float(a @ x)
                tight_x = np.abs(Gp @ x) <= tol
                for y, vy in neg:
                    common = tight_x & (np.abs(Gp @ y) <= tol)
                    if m > 2 and (not common.any()
                                  or np.linalg.matrix_rank(Gp[common], tol=1e-8) != m - 2):
                        continue
                    w = vx * y - vy * x
                    nw = np.linalg.norm(w)
                    if nw > tol:
                        new.append(w / nw)
        rays = _dedupe(new)
        processed.append(row)
        if not rays:
            break
    if not rays:
        return np.zeros((m, 0))
    return np.column_stack(rays)


def _dedupe(vectors, tol=1e-8):
    out = []
    for v in vectors:
        if all(np.linalg.norm(v - u) > tol for u in out):
            out.append(v)
    return out


def extreme_rays_bruteforce(G, tol: float = 1e-9) -> np.ndarray:
    """Reference enumeration: every (m-1)-row subset with rank m-1 yields a candidate."""
    G = as_matrix(G, "G")
    k, m = G.shape
    found = []
    for rows in itertools.combinations(range(k), m - 1):
        sub = G[list(rows)]
        if m > 1 and np.linalg.matrix_rank(sub, tol=1e-10) != m - 1:
            continue
        d = kernel_basis(sub).columns[:, 0] if m > 1 else np.ones(1)
        for cand in (d, -d):
            if np.all(G @ cand >= -tol):
                found.append(cand / np.linalg.norm(cand))
    found = _dedupe(found)
    return np.column_stack(found) if found else np.zeros((m, 0))


# -- validation -----------------------------------------------------------------------


@dataclass
class ValidationReport:
    singular: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)        # (i, j, witness)
    face_violations: list = field(default_factory=list)  # (i, j, offending rays)

    @property
    def ok(self) -> bool:
        return not (self.singular or self.overlaps or self.face_violations)

    def first_failure(self):
        for i, j, _ in self.overlaps + self.face_violations:
            return (i, j)
        return None

    def summary(self) -> str:
        if self.ok:
            return "partition valid"
        parts = []
        if self.singular:
            parts.append(f"singular cones {[i + 1 for i in self.singular]}")
        for i, j, w in self.overlaps:
            parts.append(f"interiors of cones {i + 1} and {j + 1} overlap at {np.round(w, 6).tolist()}")
        for i, j, _ in self.face_violations:
            parts.append(f"intersection of cones {i + 1} and {j + 1} is not a common face")
        return "; ".join(parts)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "singular": [i + 1 for i in self.singular],
            "overlaps": [{"i": i + 1, "j": j + 1, "witness": w.tolist()} for i, j, w in self.overlaps],
            "face_violations": [{"i": i + 1, "j": j + 1, "rays": np.asarray(z).T.tolist()}
                                for i, j, z in self.face_violations],
        }


def _shared_columns(Ri, Rj):
    shared = []
    for a in range(Ri.shape[1]):
        if _parallel_index(Ri[:, a], Rj) is not None:
            shared.append(Ri[:, a])
    m = Ri.shape[0]
    return np.column_stack(shared) if shared else np.zeros((m, 0))


def validate_partition(p: SimplicialConicPartition,
                       prof: ToleranceProfile = DEFAULT_PROFILE) -> ValidationReport:
    """Check nonsingularity, interior disjointness and the common-face property per pair."""
    rep = ValidationReport()
    m = p.m
    for i, c in enumerate(p.cones):
        if rank_tol(c.R, prof) < m:
            rep.singular.append(i)
    if rep.singular:
        return rep
    if m > MAX_VALIDATION_DIM:
        raise UnsupportedDimensionError(
            f"unsupported dimension for validation: m = {m} > {MAX_VALIDATION_DIM}")
    for i, j in itertools.combinations(range(p.N), 2):
        G = np.vstack([p.cones[i].R_inv, p.cones[j].R_inv])
        X = extreme_rays(G)
        if X.shape[1] and rank_tol(X, prof) == m:
            w = X.sum(axis=1)
            rep.overlaps.append((i, j, w / np.linalg.norm(w)))
            continue
        Z = _shared_columns(p.R(i), p.R(j))
        extra = [X[:, a] for a in range(X.shape[1]) if _parallel_index(X[:, a], Z, 1e-7) is None]
        if extra:
            rep.face_violations.append((i, j, np.column_stack(extra)))
    return rep


# -- queries --------------------------------------------------------------------------


def _shared_face(p, i, j, prof=DEFAULT_PROFILE) -> BoundaryFace:
    Z = _shared_columns(p.R(i), p.R(j))
    H = kernel_basis(Z.T, prof).columns.T
    return BoundaryFace(i, j, Z, H)


def shared_boundary(p: SimplicialConicPartition, i: int, j: int) -> BoundaryFace:
    """Shared-ray matrix Z_ij and annihilator H_ij (H Z = 0) for cones i, j (0-based)."""
    if not p.validated:
        raise PreconditionError("shared_boundary requires a validated partition")
    if i == j:
        raise InvalidInputError("shared_boundary: i == j")
    a, b = min(i, j), max(i, j)
    face = p._faces[(a, b)]
    return face if (i, j) == (a, b) else BoundaryFace(i, j, face.Z, face.H)


def locate(p: SimplicialConicPartition, z, prof: ToleranceProfile = DEFAULT_PROFILE) -> list:
    """Sorted indices of all cones containing z (empty if z lies outside the partition)."""
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != p.m:
        raise InvalidInputError(f"locate: expected a {p.m}-vector")
    thr = -prof.residual_tol * np.linalg.norm(z)
    return [i for i, c in enumerate(p.cones) if np.all(c.R_inv @ z >= thr)]


def cone_sample(c: SimplicialCone, rng: np.random.Generator, lam=None) -> np.ndarray:
    """R @ lam with lam >= 0 drawn from Exp(1) unless given."""
    if lam is None:
        lam = rng.exponential(1.0, size=c.m)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise InvalidInputError("cone_sample: lam must be nonnegative")
    return c.R @ lam


def cone_samples(c: SimplicialCone, rng: np.random.Generator, count: int) -> np.ndarray:
    """Batch version of :func:`cone_sample`; returns an m x count array."""
    return c.R @ rng.exponential(1.0, size=(c.m, count))


def antipodal_reduction(p: SimplicialConicPartition,
                        prof: ToleranceProfile = DEFAULT_PROFILE) -> SimplicialConicPartition:
    """Identify each ray with its negative via signed extraction.

    Requires a centrally symmetric partition with an even number of cones where
    cone ``i + N/2`` is the negative of cone ``i``.  Every function built on the
    returned partition through the extraction matrices satisfies
    ``P_{i+N/2} = P_i``.
    """
    N = p.N
    if N % 2:
        raise InvalidInputError("symmetric pairs need an even number of cones")
    half = N // 2
    for i in range(half):
        Ri, Rk = p.R(i), p.R(i + half)
        if any(_parallel_index(-Ri[:, a], Rk) is None for a in range(p.m)):
            raise InvalidInputError(f"cone {i + half + 1} is not the negative of cone {i + 1}")
    reps = np.zeros((p.m, 0))
    memberships = []
    for i in range(N):
        members = []
        for a in range(p.m):
            v = p.R(i)[:, a]
            k = _parallel_index(v, reps)
            if k is not None:
                members.append((k, 1))
                continue
            k = _parallel_index(-v, reps)
            if k is not None:
                members.append((k, -1))
                continue
            reps = np.column_stack([reps, v])
            members.append((reps.shape[1] - 1, 1))
        memberships.append(tuple(members))
    return SimplicialConicPartition(reps, tuple(memberships), validated=p.validated)
