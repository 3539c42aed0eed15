"""Command-line entry point ``sdot-robust``.

Domain errors exit with code 1 and a JSON description on stderr; usage errors exit with 2.
Every JSON document carries ``schema_version`` and the run configuration under
``config``; CSV outputs start with a ``# config:`` comment line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io
from .breakdown import breakdown_point
from .curves import CurveSpec, emit_figure1
from .depth import depth
from .errors import SdotError
from .measures import ReferenceMeasure
from .robustness import ExperimentConfig, default_radii, divergence_experiment
from .sdot import SolveConfig, ranks, solve
from .trimming import MODES, trim_cube, trim_depth

log = logging.getLogger("sdot_robust")


def _reference(text: str) -> ReferenceMeasure:
    try:
        return ReferenceMeasure.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _point(text: str) -> np.ndarray:
    try:
        return io.parse_point(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _indices(text: str) -> list[int]:
    try:
        return io.parse_indices(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _floats(text: str) -> list[float]:
    return [float(x) for x in _point(text)]


def _ints(text: str) -> list[int]:
    return _indices(text)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _run_config(args, **extra) -> dict:
    """The configuration echoed into every output."""
    cfg = {"command": args.command_name, "seed": args.seed, "threads": args.threads,
           "log_level": args.log_level, "out": args.out}
    for key in ("budget", "tol", "max_iter", "reference", "atoms", "map"):
        if hasattr(args, key):
            val = getattr(args, key)
            cfg[key] = str(val) if isinstance(val, ReferenceMeasure) else val
    cfg.update(extra)
    return cfg


def _document(args, payload: dict, **extra) -> str:
    doc = {"schema_version": io.SCHEMA_VERSION, "config": _run_config(args, **extra)}
    doc.update(payload)
    return io.dumps(doc)


def _solve_config(args) -> SolveConfig:
    return SolveConfig(mass_tolerance=args.tol, max_iterations=args.max_iter,
                       mc_budget=args.budget, seed=args.seed)


def cmd_sdot_solve(args) -> int:
    target = io.read_atoms(args.atoms)
    config = _solve_config(args)
    tmap = solve(args.reference, target, config)
    doc = io.map_document(tmap, config=_run_config(args))
    io.emit(io.dumps(doc), args.out)
    return 0


def cmd_sdot_map(args) -> int:
    tmap = io.load_map(args.map)
    if args.points_file:
        pts = np.atleast_2d(np.loadtxt(args.points_file, delimiter=",", comments="#", ndmin=2))
    else:
        pts = np.atleast_2d(np.array([io.parse_point(p) for p in args.point]))
    idx = tmap.classify(pts)
    images = tmap.target.atoms[idx]
    payload = {"points": pts, "cells": idx, "images": images}
    io.emit(_document(args, payload), args.out)
    return 0


def cmd_sdot_ranks(args) -> int:
    tmap = io.load_map(args.map)
    r = ranks(tmap, args.budget, args.seed)
    io.emit(_document(args, {"ranks": r, "convention": "barycentre"}), args.out)
    return 0


def cmd_depth(args) -> int:
    res = depth(args.reference, args.point)
    io.emit(_document(args, res.to_dict(), point=args.point), args.out)
    return 0


def cmd_bdp_point(args) -> int:
    target = io.read_atoms(args.atoms)
    report = breakdown_point(args.reference, target, args.u)
    io.emit(_document(args, report.to_dict(), u=args.u), args.out)
    return 0


def cmd_bdp_curve(args) -> int:
    kinds = {"spherical": ("sphunif",), "sphunif": ("sphunif",), "ball": ("ball",),
             "both": ("sphunif", "ball")}[args.kind]
    n = None if args.n == "asymptotic" else int(args.n)
    spec = CurveSpec(kinds=kinds, dims=tuple(args.dims),
                     alphas=tuple(np.linspace(0.0, 1.0, args.alphas)), n=n)
    emit_figure1(spec, out=args.out if args.out not in (None, "-") else sys.stdout,
                 config={"command": args.command_name, "seed": args.seed})
    return 0


def cmd_bdp_empirical(args) -> int:
    target = io.read_atoms(args.atoms)
    config = ExperimentConfig(solve=_solve_config(args), integral_budget=args.integral_budget,
                              seed=args.seed, threads=args.threads)
    radii = None
    if args.rgrid is not None:
        radii = default_radii(target, tuple(args.rgrid))
    profile = divergence_experiment(args.reference, target, args.u, args.contaminate, args.delta,
                                    radii, config)
    if args.csv:
        lines = [f"# config: {json.dumps(io._clean(_run_config(args)), sort_keys=True)}", "R,integral"]
        lines += [f"{r!r},{v!r}" for r, v in zip(profile.radii, profile.integrals)]
        io.emit("\n".join(lines) + "\n", args.csv)
    io.emit(_document(args, profile.to_dict(), u=args.u, contaminate=args.contaminate,
                      delta=args.delta), args.out)
    return 0


def cmd_trim(args) -> int:
    tmap = io.load_map(args.map)
    fn = trim_cube if args.mode == "cube" else trim_depth
    res = fn(tmap, args.beta, budget=args.budget, seed=args.seed)
    io.emit(_document(args, res.to_dict()), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    levels = ["DEBUG", "INFO", "WARNING", "ERROR"]
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
    common.add_argument("--threads", type=_positive_int, default=None, help="worker cap (default 1)")
    common.add_argument("--log-level", default=None, choices=levels)
    common.add_argument("--out", default=None, help="output path (default stdout)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-3, help="mass tolerance")
    solver.add_argument("--budget", type=int, default=1_000_000, help="Monte-Carlo sample size")
    solver.add_argument("--max-iter", type=int, default=500)

    parser = argparse.ArgumentParser(prog="sdot-robust", description=__doc__.splitlines()[0])
    # global spellings; a value given after the subcommand wins
    parser.add_argument("--threads", dest="global_threads", type=_positive_int, default=1,
                        help="worker cap for every subcommand (default 1)")
    parser.add_argument("--log-level", dest="global_log_level", default="WARNING", choices=levels)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sdot = sub.add_parser("sdot", help="semi-discrete OT solver")
    s_sdot = p_sdot.add_subparsers(dest="action", required=True)
    p = s_sdot.add_parser("solve", parents=[common, solver], help="solve for the adapted weights")
    p.add_argument("--reference", type=_reference, required=True)
    p.add_argument("--atoms", required=True)
    p.set_defaults(func=cmd_sdot_solve, command_name="sdot solve")
    p = s_sdot.add_parser("map", parents=[common], help="apply a solved map to points")
    p.add_argument("--map", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--point", action="append", help="point as x1,...,xd (repeatable)")
    group.add_argument("--points-file", help="CSV file with one point per row")
    p.set_defaults(func=cmd_sdot_map, command_name="sdot map")
    p = s_sdot.add_parser("ranks", parents=[common], help="barycentres of the power cells")
    p.add_argument("--map", required=True)
    p.add_argument("--budget", type=int, default=1_000_000)
    p.set_defaults(func=cmd_sdot_ranks, command_name="sdot ranks")

    p = sub.add_parser("depth", parents=[common], help="halfspace depth of a point")
    p.add_argument("--reference", type=_reference, required=True)
    p.add_argument("--point", type=_point, required=True)
    p.set_defaults(func=cmd_depth, command_name="depth")

    p_bdp = sub.add_parser("bdp", help="breakdown points")
    s_bdp = p_bdp.add_subparsers(dest="action", required=True)
    p = s_bdp.add_parser("point", parents=[common], help="exact breakdown point at u")
    p.add_argument("--reference", type=_reference, required=True)
    p.add_argument("--atoms", required=True)
    p.add_argument("--u", type=_point, required=True)
    p.set_defaults(func=cmd_bdp_point, command_name="bdp point")
    p = s_bdp.add_parser("curve", parents=[common], help="asymptotic breakdown curves as CSV")
    p.add_argument("--kind", choices=["spherical", "sphunif", "ball", "both"], default="both")
    p.add_argument("--dims", type=_ints, default=[1, 2, 3, 5, 10])
    p.add_argument("--n", default="asymptotic", help="'asymptotic' or a sample size")
    p.add_argument("--alphas", type=_positive_int, default=201, help="alpha grid size")
    p.set_defaults(func=cmd_bdp_curve, command_name="bdp curve")
    p = s_bdp.add_parser("empirical", parents=[common, solver],
                         help="divergence profile under ray contamination")
    p.add_argument("--reference", type=_reference, required=True)
    p.add_argument("--atoms", required=True)
    p.add_argument("--u", type=_point, required=True)
    p.add_argument("--contaminate", type=_indices, required=True, help="atom indices, e.g. 0,3,5")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--rgrid", type=_floats, default=None,
                   help="radii in units of the atom-cloud diameter (default 10,20,40,80)")
    p.add_argument("--integral-budget", type=int, default=100_000)
    p.add_argument("--csv", default=None, help="also write the profile as CSV here")
    p.set_defaults(func=cmd_bdp_empirical, command_name="bdp empirical", budget=100_000)

    p = sub.add_parser("trim", parents=[common], help="OT trimmed mean from a solved map")
    p.add_argument("--mode", choices=MODES, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--budget", type=int, default=1_000_000, help="rank sample size")
    p.set_defaults(func=cmd_trim, command_name="trim")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.threads = args.threads or args.global_threads
    args.log_level = args.log_level or args.global_log_level
    if args.command == "bdp" and args.action == "curve" and args.n != "asymptotic":
        try:
            if int(args.n) < 1:
                raise ValueError
        except ValueError:
            parser.error(f"argument --n: expected 'asymptotic' or a positive integer, got {args.n!r}")
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SdotError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return 1
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)},
                                    sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
