"""Command line front end: ``pwqcont <subcommand> ...``.

Exit codes: 0 verdict true / certified, 1 verdict false / infeasible / failed,
2 invalid input (unreadable or malformed files, bad arguments).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from . import continuity as cont
from .cones import partition_from_dict
from .errors import (InvalidInputError, NumericalInconsistencyError, OutOfDomainError,
                     PartitionInvalidError, PwqError, SolverError, UnsupportedDimensionError)
from .io import dumps, load_json
from .lyapunov import ConewiseLinearSystem, StabilityCertificate, synthesize, verify
from .numerics import DEFAULT_PROFILE, ToleranceProfile
from .projection import ProjectionProblem, solve_onesided, solve_projection, solve_symmetric
from .simulation import evaluate_along, simulate, write_csv

EXIT_OK, EXIT_FALSE, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    prof: ToleranceProfile
    seed: int
    output: Optional[Path]
    timestamp: bool


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# -- argument parsing -----------------------------------------------------------------


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _pos_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--tol", type=_pos_float, default=DEFAULT_PROFILE.residual_tol,
                   help="normalised residual tolerance (default %(default)g)")
    g.add_argument("--rank-tol", type=_pos_float, default=DEFAULT_PROFILE.rank_tol,
                   help="relative singular value threshold (default %(default)g)")
    g.add_argument("--seed", type=_nonneg_int, default=0, help="random seed (default 0)")
    g.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    g.add_argument("-o", "--output", type=Path, help="write the report (CSV for simulate) here")
    g.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")

    ap = argparse.ArgumentParser(
        prog="pwqcont",
        description="Continuity checks and Lyapunov certificates for piecewise quadratic "
                    "functions on simplicial conic partitions.",
        epilog="exit status: 0 verdict true or certified, 1 verdict false, infeasible or "
               "failed, 2 invalid input")
    ap.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_)

    p = add("check", "check continuity of a PWQ function")
    p.add_argument("--partition", required=True, type=Path, help="partition JSON")
    p.add_argument("--pwq", required=True, type=Path, help="PWQ function JSON")
    p.add_argument("--condition", choices=["rays", "t3", "t5", "t4", "all"], default="all",
                   help="rays: shared-ray pairs, t3: boundary subspaces, "
                        "t5: multipliers, t4: Φ-parametrisation")

    p = add("phi", "recover the Φ parametrisation of a continuous PWQ function")
    p.add_argument("--partition", required=True, type=Path, help="partition JSON")
    p.add_argument("--pwq", required=True, type=Path, help="PWQ function JSON")
    p.add_argument("--v-matrix", choices=["cperp", "identity"], default="cperp",
                   help="auxiliary matrix V (default: basis of ker C)")

    p = add("gamma", "compute continuity multipliers for every constrained pair")
    p.add_argument("--partition", required=True, type=Path, help="partition JSON")
    p.add_argument("--pwq", required=True, type=Path, help="PWQ function JSON")

    p = add("lemma", "solve Q + U^T X V + V^T X^T U = 0 from a JSON file with U, V, Q")
    p.add_argument("--input", required=True, type=Path, help="JSON with U, Q (and V)")
    p.add_argument("--variant", choices=["general", "onesided", "symmetric"], default="general",
                   help="onesided fixes V = I; symmetric uses V = U and symmetric X")

    p = add("lyap", "synthesise a PWQ Lyapunov certificate")
    p.add_argument("--system", required=True, type=Path, help="system JSON")
    p.add_argument("--method", choices=["phi", "equality"], default="phi")
    p.add_argument("--eps", type=_pos_float, default=1e-6,
                   help="LMI margin (default %(default)g)")
    p.add_argument("--symmetric-pairs", action="store_true",
                   help="tie region i + N/2 to region i")
    p.add_argument("--objective", choices=["feasibility", "trace"], default="feasibility",
                   help="trace minimises the sum of trace(P_i)")
    p.add_argument("--solver", default="CLARABEL", help="cvxpy conic solver name")

    p = add("verify", "verify a certificate without a solver")
    p.add_argument("--system", required=True, type=Path, help="system JSON")
    p.add_argument("--cert", required=True, type=Path, help="certificate JSON from lyap")
    p.add_argument("--samples", type=_nonneg_int, default=1000, help="samples per cone")
    p.add_argument("--continuity-tol", type=_pos_float, default=1e-6,
                   help="bound on the boundary residual (default %(default)g)")

    p = add("simulate", "integrate the conewise linear system with fixed-step RK4")
    p.add_argument("--system", required=True, type=Path, help="system JSON")
    p.add_argument("--x0", required=True, help='comma separated initial state, e.g. "-1,0"')
    p.add_argument("--dt", type=_pos_float, default=1e-3, help="step (default %(default)g)")
    p.add_argument("--t-final", type=_pos_float, default=10.0,
                   help="horizon (default %(default)g)")
    p.add_argument("--pwq", type=Path,
                   help="PWQ function or certificate to evaluate along the path")

    p = add("xvalidate", "cross-validate the four continuity tests on random functions")
    p.add_argument("--partition", required=True, type=Path, help="partition JSON")
    p.add_argument("--c-matrix", type=Path, help='JSON file with {"C": ...} (default identity)')
    p.add_argument("--trials", type=_nonneg_int, default=100, help="default %(default)s")
    p.add_argument("--eps", type=_pos_float, default=1e-3, help="perturbation size")
    p.add_argument("--workers", type=_nonneg_int, default=1, help="worker threads")
    return ap


# -- loaders --------------------------------------------------------------------------


def _partition(path, prof):
    return partition_from_dict(load_json(path), prof)


def _pwq(path):
    data = load_json(path)
    if isinstance(data, dict) and "P" in data and "C" not in data:
        data = dict(data, C=np.eye(len(data["P"][0])).tolist())
    return cont.PwqFunction.from_dict(data)


def _system(path, prof):
    return ConewiseLinearSystem.from_dict(load_json(path), prof)


def _matrix_arg(data, key):
    try:
        M = np.array(data[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"missing or malformed {key!r} ({exc})") from None
    return M


# -- subcommands ----------------------------------------------------------------------


def cmd_check(cfg: RunConfig):
    a = cfg.args
    part = _partition(a.partition, cfg.prof)
    pwq = _pwq(a.pwq)
    reports = {}
    wanted = cont.CONDITIONS if a.condition == "all" else (a.condition,)
    for cond in wanted:
        if cond == "rays":
            reports[cond] = cont.check_rays(pwq, part, cfg.prof).to_dict()
        elif cond == "t3":
            reports[cond] = cont.check_subspace(pwq, part, cfg.prof).to_dict()
        elif cond == "t5":
            reports[cond] = cont.gamma_report(pwq, part, cfg.prof).to_dict()
        else:
            phi = cont.synthesize_phi(pwq, part, "cperp", cfg.prof)
            reports[cond] = {"condition": "t4", "verdict": bool(phi), **phi.to_dict()}
            reports[cond].pop("feasible", None)
    verdict = all(r["verdict"] for r in reports.values())
    return verdict, {"verdict": verdict, "conditions": reports}


def cmd_phi(cfg: RunConfig):
    a = cfg.args
    part = _partition(a.partition, cfg.prof)
    pwq = _pwq(a.pwq)
    phi = cont.synthesize_phi(pwq, part, a.v_matrix, cfg.prof)
    out = phi.to_dict()
    out.setdefault("feasible", bool(phi))
    return bool(phi), out


def cmd_gamma(cfg: RunConfig):
    a = cfg.args
    part = _partition(a.partition, cfg.prof)
    pwq = _pwq(a.pwq)
    g = cont.synthesize_gamma(pwq, part, cfg.prof)
    out = g.to_dict()
    if g:
        out["check"] = cont.check_gamma(pwq, part, g, cfg.prof).to_dict()
    return bool(g), out


def cmd_lemma(cfg: RunConfig):
    a = cfg.args
    data = load_json(a.input)
    U = _matrix_arg(data, "U")
    Q = _matrix_arg(data, "Q")
    if a.variant == "onesided":
        res = solve_onesided(U, Q, cfg.prof)
    elif a.variant == "symmetric":
        res = solve_symmetric(U, Q, cfg.prof)
    else:
        V = _matrix_arg(data, "V")
        res = solve_projection(ProjectionProblem(U, V, Q), cfg.prof)
    return res.feasible, {"variant": a.variant, **res.to_dict()}


def cmd_lyap(cfg: RunConfig):
    from .backends import CvxpyBackend

    a = cfg.args
    sysm = _system(a.system, cfg.prof)
    cert = synthesize(sysm, a.method, a.eps, CvxpyBackend(a.solver), a.symmetric_pairs,
                      a.objective, prof=cfg.prof)
    if not cert:
        return False, cert.to_dict()
    return True, {"feasible": True, "min_margin": cert.min_margin, **cert.to_dict()}


def cmd_verify(cfg: RunConfig):
    a = cfg.args
    sysm = _system(a.system, cfg.prof)
    cert = StabilityCertificate.from_dict(load_json(a.cert))
    rep = verify(sysm, cert, a.samples, cfg.seed, cfg.prof, a.continuity_tol)
    return rep.passed, rep.to_dict()


def cmd_simulate(cfg: RunConfig):
    a = cfg.args
    sysm = _system(a.system, cfg.prof)
    try:
        x0 = [float(v) for v in a.x0.split(",")]
    except ValueError:
        raise InvalidInputError(f"--x0: cannot parse {a.x0!r}") from None
    traj = simulate(sysm, x0, a.dt, a.t_final, cfg.prof)
    out = {"steps": len(traj) - 1, "t_final": float(traj.times[-1]),
           "final_state": traj.final.tolist(),
           "final_norm": float(np.linalg.norm(traj.final))}
    values = None
    ok = True
    if a.pwq is not None:
        data = load_json(a.pwq)
        if "C" not in data:
            data = dict(data, C=sysm.C.tolist())
        pwq = cont.PwqFunction.from_dict({"C": data["C"], "P": data.get("P")})
        series = evaluate_along(pwq, sysm, traj, prof=cfg.prof)
        values = series.values
        out["lyapunov"] = series.to_dict()
        ok = series.nonincreasing
    if cfg.output is not None:
        write_csv(cfg.output, traj, values)
        out["csv"] = str(cfg.output)
    return ok, out


def cmd_xvalidate(cfg: RunConfig):
    a = cfg.args
    part = _partition(a.partition, cfg.prof)
    C = np.eye(part.m) if a.c_matrix is None else _matrix_arg(load_json(a.c_matrix), "C")
    rep = cont.cross_validate(part, C, a.trials, cfg.seed, cfg.prof, a.eps, max(a.workers, 1))
    return rep.ok, rep.to_dict()


COMMANDS = {"check": cmd_check, "phi": cmd_phi, "gamma": cmd_gamma, "lemma": cmd_lemma,
            "lyap": cmd_lyap, "verify": cmd_verify, "simulate": cmd_simulate,
            "xvalidate": cmd_xvalidate}


# -- dispatch -------------------------------------------------------------------------


def dispatch(cfg: RunConfig) -> int:
    report = {"command": cfg.command, "version": _version()}
    if cfg.timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    try:
        ok, body = COMMANDS[cfg.command](cfg)
        code = EXIT_OK if ok else EXIT_FALSE
        report.update(body)
    except (InvalidInputError, PartitionInvalidError, UnsupportedDimensionError) as exc:
        print(f"pwqcont {cfg.command}: error: {exc}", file=sys.stderr)
        report = None
        code = EXIT_INPUT
        if isinstance(exc, PartitionInvalidError) and exc.report is not None:
            report = {"command": cfg.command, "error": str(exc),
                      "validation": exc.report.to_dict()}
    except (SolverError, OutOfDomainError, NumericalInconsistencyError) as exc:
        print(f"pwqcont {cfg.command}: {exc}", file=sys.stderr)
        report.update({"error": type(exc).__name__, "message": str(exc)})
        if isinstance(exc, SolverError):
            report["solver_status"] = exc.status
        if isinstance(exc, OutOfDomainError):
            report["time"] = exc.time
        code = EXIT_FALSE
    except PwqError as exc:
        print(f"pwqcont {cfg.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report is not None:
        text = dumps(report)
        if cfg.output is not None and cfg.command != "simulate":
            cfg.output.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        prof = ToleranceProfile(args.rank_tol, args.tol)
    except InvalidInputError as exc:
        ap.error(str(exc))
    cfg = RunConfig(args.command, args, prof, args.seed, args.output, not args.no_timestamp)
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
