"""Fixed-step integration of conewise linear dynamics and PWQ values along trajectories."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cones import locate
from .continuity import PwqFunction, evaluate
from .errors import InvalidInputError, OutOfDomainError
from .lyapunov import ConewiseLinearSystem
from .numerics import DEFAULT_PROFILE, ToleranceProfile


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray       # (K,)
    states: np.ndarray      # (K, n)
    regions: np.ndarray     # (K,) 0-based

    def __post_init__(self):
        K = len(self.times)
        if self.states.shape[0] != K or len(self.regions) != K:
            raise InvalidInputError("trajectory arrays have different lengths")
        if K > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidInputError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _region(sysm: ConewiseLinearSystem, x, t, prof) -> int:
    hits = locate(sysm.partition, sysm.C @ x, prof)
    if not hits:
        raise OutOfDomainError(f"state left the partitioned set at t = {t:.6g}", time=t, state=x)
    return hits[0]


def simulate(sysm: ConewiseLinearSystem, x0, dt: float, t_final: float,
             prof: ToleranceProfile = DEFAULT_PROFILE) -> Trajectory:
    """Classical RK4 with the dynamics frozen at the region of the step's start state.

    At boundaries the lowest region index wins.  There is no event detection,
    so switching instants are resolved only to within one step.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (sysm.n,):
        raise InvalidInputError(f"x0 must have {sysm.n} entries")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x0 must be finite")
    if not (dt > 0 and t_final > 0):
        raise InvalidInputError("dt and t_final must be positive")
    steps = int(np.ceil(t_final / dt - 1e-9))
    times = np.arange(steps + 1) * dt
    times[-1] = min(times[-1], t_final) if steps else 0.0
    states = np.empty((steps + 1, sysm.n))
    regions = np.empty(steps + 1, dtype=int)
    for k in range(steps + 1):
        states[k] = x
        regions[k] = _region(sysm, x, times[k], prof)
        if k == steps:
            break
        h = times[k + 1] - times[k]
        A = sysm.A[regions[k]]
        k1 = A @ x
        k2 = A @ (x + 0.5 * h * k1)
        k3 = A @ (x + 0.5 * h * k2)
        k4 = A @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Trajectory(times, states, regions)


@dataclass
class ValueSeries:
    values: np.ndarray
    max_increase: float
    nonincreasing: bool
    tol: float

    def to_dict(self) -> dict:
        return {"max_increase": self.max_increase, "nonincreasing": self.nonincreasing,
                "tol": self.tol}


def evaluate_along(pwq: PwqFunction, sysm_or_partition, traj: Trajectory,
                   rel_tol: float = 1e-8,
                   prof: ToleranceProfile = DEFAULT_PROFILE) -> ValueSeries:
    """V(x(t_k)) for every step and whether the series is nonincreasing.

    An increase counts only if it exceeds ``rel_tol`` times the largest value.
    """
    p = getattr(sysm_or_partition, "partition", sysm_or_partition)
    if traj.states.shape[1] != pwq.n:
        raise InvalidInputError("trajectory and PWQ function have different state dimensions")
    values = np.array([evaluate(pwq, p, x, prof).value for x in traj.states])
    inc = float(np.max(np.diff(values))) if len(values) > 1 else 0.0
    tol = rel_tol * float(np.max(np.abs(values))) if len(values) else 0.0
    return ValueSeries(values, inc, inc <= tol, tol)


def write_csv(path, traj: Trajectory, values: Optional[np.ndarray] = None):
    """Columns t, x_1..x_n, region (1-based) and optionally V."""
    n = traj.states.shape[1]
    header = ["t"] + [f"x_{a + 1}" for a in range(n)] + ["region"]
    if values is not None:
        header.append("V")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(traj)):
            row = [repr(float(traj.times[k]))] + [repr(float(v)) for v in traj.states[k]]
            row.append(int(traj.regions[k]) + 1)
            if values is not None:
                row.append(repr(float(values[k])))
            w.writerow(row)
