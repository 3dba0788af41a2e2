"""Command-line interface: solve couplings, check monotonicity, run the
tail-limit experiment, and verify the closed-form oracle.

stdout carries machine-readable JSON only; human diagnostics go to stderr.
All numbers are printed with 17 significant digits so runs are diffable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .measures import DiscreteMeasure, parse_config
from .monotone import SupportSet, is_cyclically_monotone
from .oracle import verify_pushforward_55
from .proper import residual_decomposition
from .regvar import (Window, rv_model_from_config, tail_coupling_experiment)
from .transport import coupling_support, solve_zero_coupling

DEFAULT_MASTER_SEED = 0xC0FFEE


def _fmt(v) -> str:
    """JSON token with 17 significant digits for floats."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        if math.isnan(x):
            return '"nan"'
        return "%.17g" % x
    if isinstance(v, str):
        return '"%s"' % v
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join('"%s": %s' % (k, _fmt(x)) for k, x in v.items()) + "}"
    raise TypeError(f"cannot format {type(v)}")


def _emit(obj) -> None:
    sys.stdout.write(_fmt(obj) + "\n")


def cmd_solve(args) -> int:
    try:
        mu = DiscreteMeasure.load_csv(args.mu)
        nu = DiscreteMeasure.load_csv(args.nu)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        plan = solve_zero_coupling(mu, nu, reservoir=args.reservoir)
    except ValueError as exc:
        if "unbalanced" in str(exc):
            print("error: unbalanced totals (use --reservoir)", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        plan.save_csv(args.out)
    res = residual_decomposition(plan)
    cm = is_cyclically_monotone(coupling_support(plan))
    _emit({
        "cost": plan.cost,
        "left_residual": res.left_residual,
        "right_residual": res.right_residual,
        "cm_check": cm.ok,
    })
    return 0


def cmd_check_cm(args) -> int:
    try:
        S = SupportSet.load_csv(args.support)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res = is_cyclically_monotone(S, tol=args.tol)
    if res.ok:
        _emit({"ok": True})
        return 0
    _emit({"ok": False, "witness_cycle": list(res.witness_cycle)})
    return 1


def cmd_tail_experiment(args) -> int:
    try:
        P = rv_model_from_config(parse_config(args.p))
        Q = rv_model_from_config(parse_config(args.q))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: bad model config: {exc}", file=sys.stderr)
        return 2
    r_lo, r_hi, y_max = (float(v) for v in args.window.split(","))
    window = Window(r_lo, r_hi, y_max)
    t_grid = [float(v) for v in args.t_grid.split(",")]
    rows, _ = tail_coupling_experiment(P, Q, t_grid, args.n, args.seed,
                                       window, n_seeds=args.seeds)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "report.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t,seed,n,fell_dist,m0_dist,left_residual,cost\n")
        for r in rows:
            fh.write("%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g\n"
                     % (r.t, r.seed, r.n, r.fell_dist, r.m0_dist,
                        r.left_residual, r.cost))
    medians = []
    for t in t_grid:
        fd = [r.fell_dist for r in rows if r.t == t]
        md = [r.m0_dist for r in rows if r.t == t]
        medians.append({"t": t,
                        "median_fell_dist": float(np.median(fd)),
                        "median_m0_dist": float(np.median(md))})
    summary = {"master_seed": args.seed, "n": args.n, "seeds": args.seeds,
               "window": [window.r_lo, window.r_hi, window.y_max],
               "medians": medians}
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(_fmt(summary) + "\n")
    _emit(summary)
    return 0


def cmd_oracle_verify(args) -> int:
    report = verify_pushforward_55(resolution=args.resolution, tol=args.tol)
    _emit({
        "passed": report.passed,
        "tol": report.tol,
        "max_mass_rel_error": report.max_mass_rel_error,
        "max_grad_fd_error": report.max_grad_fd_error,
        "max_value_homog_error": report.max_value_homog_error,
        "right_half_plane_mass": report.right_half_plane_mass,
        "sets": [{"name": n, "expected": e, "actual": a, "rel_error": r}
                 for (n, e, a, r) in report.details],
    })
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zerocoupling",
        description="cyclically monotone zero-couplings: solve, check, "
                    "experiment, verify")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="minimum-cost coupling of two measures")
    ps.add_argument("--mu", required=True)
    ps.add_argument("--nu", required=True)
    ps.add_argument("--reservoir", action="store_true")
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("check-cm", help="cyclical monotonicity of a support")
    pc.add_argument("--support", required=True)
    pc.add_argument("--tol", type=float, default=1e-9)
    pc.set_defaults(func=cmd_check_cm)

    pt = sub.add_parser("tail-experiment",
                        help="rescaled empirical couplings vs the limit")
    pt.add_argument("--p", required=True)
    pt.add_argument("--q", required=True)
    pt.add_argument("--n", type=int, required=True)
    pt.add_argument("--t-grid", required=True,
                    help="comma-separated t values")
    pt.add_argument("--seeds", type=int, default=10)
    pt.add_argument("--out", required=True)
    pt.add_argument("--seed", type=int, default=DEFAULT_MASTER_SEED)
    pt.add_argument("--window", default="1,3,6",
                    help="r_lo,r_hi,y_max window in the x/y norms")
    pt.set_defaults(func=cmd_tail_experiment)

    po = sub.add_parser("oracle-verify",
                        help="closed-form pushforward and gradient checks")
    po.add_argument("--resolution", type=int, default=128)
    po.add_argument("--tol", type=float, default=1e-3)
    po.set_defaults(func=cmd_oracle_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
