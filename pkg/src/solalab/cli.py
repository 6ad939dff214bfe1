"""Command line entry point: ``solalab {exponents,analyze,solve,verify}``."""

from __future__ import annotations

import argparse
import csv
import inspect
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, load_config, load_toml
from .exponents import ExponentContext, exponent_table
from .grid import Ball, gradient, read_grid_file, write_grid_file
from .measures import mollify
from .norms import CSV_HEADER, NORM_KINDS, evaluate_norm
from .solver import SolverError, solve_regularized

log = logging.getLogger("solalab")


def _cmd_exponents(args) -> int:
    ctx = ExponentContext(args.n, args.p, args.theta, args.q, args.s)
    rows = exponent_table(ctx)
    if args.csv:
        w = csv.writer(sys.stdout)
        w.writerow(["name", "value"])
        w.writerows(rows)
    else:
        width = max(len(name) for name, _ in rows)
        for name, value in rows:
            shown = f"{value:.12g}" if isinstance(value, float) else value
            print(f"{name:<{width}}  {shown}")
    return 0


def _cmd_analyze(args) -> int:
    field = read_grid_file(args.file)
    region = None
    if args.ball is not None:
        *center, radius = args.ball
        region = Ball(tuple(center), radius)
    report = evaluate_norm(field, args.norm, q=args.q, alpha=args.alpha, theta=args.theta, t=args.t,
                           R=args.R, region=region, min_count=args.min_count)
    w = csv.writer(sys.stdout)
    w.writerow(CSV_HEADER)
    w.writerow(report.csv_row())
    return 0


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    spec, sv = cfg.spec, cfg.solver
    f = cfg.rhs
    if spec.measure is not None:
        mollified = mollify(spec.measure, sv.k)
        f = mollified if f is None else f + mollified
    try:
        u, rep = solve_regularized(spec, f, sv.k, tol_rel=sv.tol_rel, max_iter=sv.max_iter)
        status = 0
    except SolverError as exc:
        log.error("%s", exc)
        u, rep = None, exc.report
        status = 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if u is not None:
        write_grid_file(out / "solution.sgf", u)
        write_grid_file(out / "gradient.sgf", gradient(u))
    with open(out / "solve_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["field", "value"])
        w.writerows(rep.csv_rows())
    return status


def _with_resolution(fn, kwargs: dict, resolution: int | None) -> dict:
    """Map ``--resolution`` onto whichever resolution keyword ``fn`` takes."""
    if resolution is None:
        return kwargs
    params = inspect.signature(fn).parameters
    kwargs = dict(kwargs)
    if "resolution" in params:
        kwargs.setdefault("resolution", resolution)
    elif "resolutions" in params:
        count = len(params["resolutions"].default)
        kwargs.setdefault("resolutions", tuple(resolution // 2**i for i in reversed(range(count))))
    return kwargs


def _cmd_verify(args) -> int:
    overrides = load_toml(args.config).get("verify", {}) if args.config else {}
    ids = list(experiments.REGISTRY) if args.experiment == "all" else [args.experiment]
    unknown = [i for i in ids if i not in experiments.REGISTRY]
    if unknown:
        print(f"unknown experiment {unknown[0]!r}; choose from: all, {', '.join(experiments.REGISTRY)}",
              file=sys.stderr)
        return 2
    ok = True
    for exp_id in ids:
        fn = experiments.REGISTRY[exp_id]
        kwargs = _with_resolution(fn, overrides.get(exp_id, {}), args.resolution)
        report = fn(**kwargs)
        path = experiments.write_report(report, args.out)
        print(report.summary())
        print(f"{exp_id}: {'PASS' if report.passed else 'FAIL'} ({report.seconds:.1f} s) -> {path}")
        ok &= report.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solalab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponents", help="tabulate regularity exponents")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--p", type=float, required=True)
    e.add_argument("--theta", type=float, required=True)
    e.add_argument("--q", type=float, default=1.0)
    e.add_argument("--s", type=float, default=0.0)
    e.add_argument("--csv", action="store_true")
    e.set_defaults(func=_cmd_exponents)

    a = sub.add_parser("analyze", help="evaluate a norm of a grid field file")
    a.add_argument("file")
    a.add_argument("--norm", choices=NORM_KINDS, required=True)
    a.add_argument("--q", type=float)
    a.add_argument("--alpha", type=float)
    a.add_argument("--theta", type=float)
    a.add_argument("--t", type=float)
    a.add_argument("--R", type=float, help="radius bound for vmo")
    a.add_argument("--min-count", type=int, default=1, help="smallest level-set size in nodes for weak norms")
    a.add_argument("--ball", type=float, nargs="+", metavar="X", help="restrict to a ball: center coords then radius")
    a.set_defaults(func=_cmd_analyze)

    s = sub.add_parser("solve", help="solve a configured problem")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    v = sub.add_parser("verify", help="run named experiments")
    v.add_argument("experiment", help="experiment id or 'all'")
    v.add_argument("--resolution", type=int, help="finest grid has h = 1/resolution")
    v.add_argument("--config", help="TOML file with [verify.<id>] keyword overrides")
    v.add_argument("--out", default="verify_out")
    v.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
