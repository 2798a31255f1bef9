"""Command-line front end.

    cbi solve   --config problem.json [--trace] [--json]
    cbi plan    --config problem.json
    cbi table   [--pairs 46:0.009895,...] [--y2 1e-4,2e-5,1e-5] [--r 0:9] [--jobs N]
    cbi curve   {ratio,stationary,phi-growth,h-trace} --config problem.json --sweep SPEC
    cbi trace   --config problem.json [--phi-start 1.0]
    cbi oracle  --config problem.json | --random N --seed S

Sweep specs: ``a:b`` (integers a..b), ``a:b:s`` (step s, end included),
``v1,v2,...`` and ``log:a:b:n`` (n log-spaced points).

Exit status is 2 for rejected input, 3 when a solve does not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np

from .config import ProblemConfig, load_config
from .errors import NoConvergence, PoleEvaluation, ValidationError
from .hfix import POLE_GUARD, HContext, h_eval
from .model import uniform_consistent_partition, validate_partition
from .oracle import STANDARD, ObjectiveTag, grid_minimize
from .planner import (
    asymptotic_limits,
    phi_growth_curve,
    phi_growth_limit,
    plan_demands_beta,
    plan_demands_cbi,
    ratio_curve,
    stationary_convergence_curve,
)
from .solver import FixedPointSolution, build_conservative_prior, iterate_trace, solve

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NO_CONVERGENCE = 0, 1, 2, 3

TABLE_PAIRS = "46:0.009895,500:0.097982,1000:0.178476"
TABLE_Y2 = "1e-4,2e-5,1e-5"
TABLE_COLUMNS = ["m", "alpha", "y2", "r", "beta_total", "cbi_total", "ratio", "feasible", "error"]
CURVE_COLUMNS = {
    "ratio": ["r", "beta_total", "cbi_total", "ratio", "feasible"],
    "stationary": ["r", "k_required", "y_star", "y_star_star", "pole", "x_star_limit"],
    "phi-growth": ["k", "phi_star", "limit"],
    "h-trace": ["x", "h"],
}
TRACE_COLUMNS = ["t", "phi"]


def parse_sweep(spec: str) -> list[float]:
    """Expand a sweep spec into its values."""
    try:
        if spec.startswith("log:"):
            _, a, b, n = spec.split(":")
            return [float(v) for v in np.geomspace(float(a), float(b), int(n))]
        if "," in spec:
            return [_num(v) for v in spec.split(",")]
        parts = spec.split(":")
        if len(parts) == 2:
            return list(range(int(parts[0]), int(parts[1]) + 1))
        if len(parts) == 3:
            a, b, s = (float(v) for v in parts)
            if s <= 0:
                raise ValueError("step must be positive")
            count = int(math.floor((b - a) / s + 1e-9)) + 1
            return [a + i * s for i in range(count)]
        return [_num(spec)]
    except ValueError as exc:
        raise ValidationError(f"bad sweep spec {spec!r}: {exc}") from exc


def _num(text: str) -> float:
    v = float(text)
    return int(v) if v.is_integer() and "e" not in text.lower() and "." not in text else v


def _write_csv(out, columns: list[str], rows: list[dict[str, Any]]) -> None:
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({c: "" if row.get(c) is None else row[c] for c in columns})


def _need_config(args) -> ProblemConfig:
    if not args.config:
        raise ValidationError(f"'{args.command}' needs --config")
    return load_config(args.config)


def _solution_dict(sol: FixedPointSolution) -> dict[str, Any]:
    return {
        "phi_star": sol.phi_star,
        "y_star": sol.y_star,
        "y_star_star": sol.y_star_star,
        "j1": sol.j1,
        "j2": sol.j2,
        "branch": sol.branch.value,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }


# ------------------------------------------------------------ subcommands


def cmd_solve(args, out) -> int:
    cfg = _need_config(args)
    if cfg.objective.tag is ObjectiveTag.CAPPED:
        raise ValidationError("the capped objective has no fixed-point solver; use 'cbi oracle'")
    r, k, m = cfg.observation.r, cfg.observation.k, cfg.target.m
    sol = solve(cfg.partition, r, k, m, cfg.tol, cfg.max_iter)
    prior = build_conservative_prior(sol, cfg.partition, r, k, m)
    trace = iterate_trace(cfg.partition, r, k, m, tol=cfg.tol, max_iter=cfg.max_iter) if args.trace and sol.iterations else []
    if args.json:
        doc = {"config": cfg.to_dict(), "solution": _solution_dict(sol), "prior": [list(a) for a in prior.atoms]}
        if args.trace:
            doc["trace"] = [{"t": t, "phi": phi, "placement": list(x.positions)} for t, phi, x in trace]
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    d = _solution_dict(sol)
    for key in ("phi_star", "y_star", "y_star_star", "j1", "j2", "branch", "residual", "iterations"):
        out.write(f"{key:12s} {d[key]}\n")
    out.write("prior atoms (location, mass):\n")
    for loc, mass in prior.atoms:
        out.write(f"  {loc!r:>24} {mass!r}\n")
    if args.trace:
        out.write("iterates:\n")
        for t, phi, x in trace:
            out.write(f"  {t:3d} {phi!r} {list(x.positions)}\n")
    return EXIT_OK


def cmd_plan(args, out) -> int:
    cfg = _need_config(args)
    m, alpha, r = cfg.target.m, cfg.target.alpha, cfg.observation.r
    if alpha is None:
        raise ValidationError("planning needs target.alpha")
    beta = plan_demands_beta(m, alpha, int(r))
    cbi = plan_demands_cbi(cfg.partition, m, alpha, int(r), cfg.tol, cfg.max_iter)
    doc = {
        "m": m,
        "alpha": alpha,
        "r": r,
        "beta_k": beta.k_required,
        "beta_total": beta.total_demands,
        "cbi_status": cbi.status.value,
        "cbi_k": cbi.k_required,
        "cbi_total": cbi.total_demands,
        "cbi_phi": cbi.phi_at_k,
        "monotonicity_ok": cbi.monotonicity_ok,
    }
    if args.json:
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        _write_csv(out, list(doc), [doc])
    return EXIT_OK


def table_cell(m: int, alpha: float, y1: float, y2: float, r: int) -> dict[str, Any]:
    """One cell of the demand table; errors are reported in the row, not raised."""
    row: dict[str, Any] = {"m": m, "alpha": alpha, "y2": y2, "r": r}
    try:
        beta = plan_demands_beta(m, alpha, r)
        row["beta_total"] = beta.total_demands
        cbi = plan_demands_cbi(uniform_consistent_partition([0.0, y1, y2, 1.0]), m, alpha, r)
        row["feasible"] = cbi.feasible
        if cbi.feasible:
            row["cbi_total"] = cbi.total_demands
            row["ratio"] = beta.total_demands / cbi.total_demands
        else:
            row["cbi_total"] = cbi.status.value
    except (ValidationError, NoConvergence) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _parse_pairs(spec: str) -> list[tuple[int, float]]:
    try:
        pairs = []
        for item in spec.split(","):
            m, alpha = item.split(":")
            pairs.append((int(m), float(alpha)))
        return pairs
    except ValueError as exc:
        raise ValidationError(f"bad --pairs {spec!r}; expected m:alpha,...") from exc


def cmd_table(args, out) -> int:
    cells = [
        (m, alpha, args.y1, float(y2), int(r))
        for m, alpha in _parse_pairs(args.pairs)
        for y2 in parse_sweep(args.y2)
        for r in parse_sweep(args.r)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(table_cell, *zip(*cells)))
    else:
        rows = [table_cell(*c) for c in cells]
    _write_csv(out, TABLE_COLUMNS, rows)
    return EXIT_FAIL if rows and all(row.get("error") for row in rows) else EXIT_OK


def _h_trace_rows(cfg: ProblemConfig, xs: list[float]) -> list[dict[str, Any]]:
    ctx = HContext(cfg.target.m, cfg.observation.k, cfg.observation.r)
    rows = []
    for x in xs:
        if not 0.0 <= x <= 1.0:
            continue
        if ctx.r > 0 and abs(x - ctx.pole) <= 10 * POLE_GUARD:
            continue
        try:
            rows.append({"x": x, "h": h_eval(ctx, x)})
        except PoleEvaluation:
            continue
    return rows


def cmd_curve(args, out) -> int:
    cfg = _need_config(args)
    part, m, alpha = cfg.partition, cfg.target.m, cfg.target.alpha
    kind = args.kind
    if kind in ("ratio", "stationary") and alpha is None:
        raise ValidationError(f"curve '{kind}' needs target.alpha")
    if kind == "ratio":
        pts = ratio_curve(part, m, alpha, [int(v) for v in parse_sweep(args.sweep or "0:9")])
        rows = [vars(p) for p in pts]
    elif kind == "stationary":
        pts = stationary_convergence_curve(part, m, alpha, [int(v) for v in parse_sweep(args.sweep or "0:9")])
        rows = [vars(p) for p in pts]
    elif kind == "phi-growth":
        r = cfg.observation.r
        limit = phi_growth_limit(part, r, m)
        rows = [{"k": k, "phi_star": phi, "limit": limit} for k, phi in phi_growth_curve(part, r, m, parse_sweep(args.sweep or "log:1:1e8:29"))]
    else:
        rows = _h_trace_rows(cfg, parse_sweep(args.sweep or "0:1:0.001"))
    _write_csv(out, CURVE_COLUMNS[kind], rows)
    return EXIT_OK


def cmd_trace(args, out) -> int:
    cfg = _need_config(args)
    trace = iterate_trace(cfg.partition, cfg.observation.r, cfg.observation.k, cfg.target.m, args.phi_start, cfg.tol, cfg.max_iter)
    n = len(trace[0][2]) if trace else 0
    columns = TRACE_COLUMNS + [f"x{i}" for i in range(1, n + 1)]
    rows = [dict(t=t, phi=phi, **{f"x{i}": v for i, v in enumerate(x.positions, 1)}) for t, phi, x in trace]
    _write_csv(out, columns, rows)
    return EXIT_OK


def _random_instance(rng: random.Random) -> tuple:
    n = rng.choice((2, 3, 4))
    cuts = sorted(rng.uniform(0.001, 0.999) for _ in range(n - 1))
    y = [0.0] + cuts + [1.0]
    w = [rng.uniform(0.05, 1.0) for _ in range(n)]
    total = sum(w)
    p = [v / total for v in w[:-1]]
    p.append(1.0 - math.fsum(p))
    r = 0 if rng.random() < 0.3 else rng.uniform(1, 100)
    return validate_partition(y, p), r, rng.uniform(1, 100), rng.randint(1, 50)


def cmd_oracle(args, out) -> int:
    if args.random:
        rng = random.Random(args.seed)
        rows, worst = [], 0.0
        for i in range(args.random):
            part, r, k, m = _random_instance(rng)
            phi_s = solve(part, r, k, m).phi_star
            phi_o, _ = grid_minimize(part, STANDARD, r, k, m, args.density, args.levels)
            worst = max(worst, abs(phi_s - phi_o))
            rows.append({"i": i, "n": part.n, "r": r, "k": k, "m": m, "solver": phi_s, "oracle": phi_o, "diff": abs(phi_s - phi_o)})
        _write_csv(out, ["i", "n", "r", "k", "m", "solver", "oracle", "diff"], rows)
        sys.stderr.write(f"max |solver - oracle| = {worst:.3g}\n")
        return EXIT_OK if worst <= 1e-6 else EXIT_FAIL
    cfg = _need_config(args)
    phi, x = grid_minimize(cfg.partition, cfg.objective, cfg.observation.r, cfg.observation.k, cfg.target.m, args.density, args.levels)
    doc = {"phi_hat": phi, "placement": list(x.positions)}
    if args.json:
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        out.write(f"phi_hat    {phi!r}\nplacement  {list(x.positions)}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _globals() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON problem file")
    g.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    g.add_argument("--out", default=argparse.SUPPRESS, help="write output to this file")
    g.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes for 'table'")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized checks")
    return g


GLOBAL_DEFAULTS = {"config": None, "json": False, "out": None, "jobs": 1, "seed": 0}


def build_parser() -> argparse.ArgumentParser:
    common = _globals()
    p = argparse.ArgumentParser(prog="cbi", description="Conservative Bayesian reliability assessment.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="worst-case predictive and conservative prior")
    s.add_argument("--trace", action="store_true", help="also print the iterates")

    sub.add_parser("plan", parents=[common], help="demands needed under Beta and conservative priors")

    t = sub.add_parser("table", parents=[common], help="regenerate the demand comparison table")
    t.add_argument("--pairs", default=TABLE_PAIRS, help="m:alpha pairs, comma separated")
    t.add_argument("--y2", default=TABLE_Y2, help="sweep of second breakpoints")
    t.add_argument("--y1", type=float, default=1e-6, help="first breakpoint")
    t.add_argument("--r", default="0:9", help="sweep of failure counts")

    c = sub.add_parser("curve", parents=[common], help="CSV series for plotting")
    c.add_argument("kind", choices=sorted(CURVE_COLUMNS))
    c.add_argument("--sweep", help="values of r, k or x depending on kind")

    tr = sub.add_parser("trace", parents=[common], help="iterate sequence as CSV")
    tr.add_argument("--phi-start", type=float, default=1.0)

    o = sub.add_parser("oracle", parents=[common], help="brute-force grid minimum")
    o.add_argument("--density", type=int, default=2000)
    o.add_argument("--levels", type=int, default=3)
    o.add_argument("--random", type=int, default=0, metavar="N", help="compare solver and oracle on N random instances")
    return p


COMMANDS = {
    "solve": cmd_solve,
    "plan": cmd_plan,
    "table": cmd_table,
    "curve": cmd_curve,
    "trace": cmd_trace,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for key, val in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except NoConvergence as exc:
        sys.stderr.write(f"no convergence: {exc}\n")
        return EXIT_NO_CONVERGENCE
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
