"""Command line front end.

    trapzeros simulate --config F [k=v ...]
    trapzeros sweep --config F --grid G [k=v ...]
    trapzeros exact --problem P --n K [--horizon H]
    trapzeros verify-bounds [--cases F]
    trapzeros report --bundle D

Exit status is 0 on success, 1 on invalid input and 2 when a check fails.
"""

import argparse
import csv
import json
import os
import sys

from . import bounds, exact, reports
from .config import parse_config
from .errors import ConfigurationError, NumericalError, ResourceError
from .trials import run_batch

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2


def parse_grid(text):
    """Grid from a file of ``n,N`` lines (header optional) or inline ``100:1,100:5``."""
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        if lines and lines[0].replace(" ", "").lower() == "n,n":
            lines = lines[1:]
        pairs = [ln.split(",") for ln in lines]
    else:
        pairs = [p.split(":") for p in text.split(",") if p.strip()]
    try:
        grid = [(int(a), int(b)) for a, b in pairs]
    except ValueError:
        raise ConfigurationError(f"grid: cannot parse '{text}'; use 'n:N,n:N' or a file of n,N lines") from None
    if not grid:
        raise ConfigurationError("grid: empty")
    return grid


def _output_dir(config, args):
    out = args.out or config.output_dir
    if not out:
        raise ConfigurationError("no output directory: set [output] dir or pass --out")
    return out


def cmd_simulate(args):
    config = parse_config(args.config, args.overrides)
    out = _output_dir(config, args)
    reports.preflight(out)
    records = run_batch(config, args.workers)
    reports.emit_experiment(out, config, [(config, records)], "simulate")
    s = reports.summary_row(config.n, config.N, records, config.eval_budget)
    print(f"n={config.n} N={config.N}: {s['successes']}/{s['trials']} hit within {config.eval_budget} evaluations "
          f"(p_hat={s['p_hat']:.4f}, 95% CI [{s['wilson_lo']:.4f}, {s['wilson_hi']:.4f}]) -> {out}")
    return EXIT_OK


def cmd_sweep(args):
    config = parse_config(args.config, args.overrides)
    if args.grid is not None:
        grid = parse_grid(args.grid)
    elif args.config.endswith(".json"):
        with open(args.config, encoding="utf-8") as fh:
            grid = [tuple(g) for g in json.load(fh).get("grid", [])]
        if not grid:
            raise ConfigurationError("grid: manifest has no grid; pass --grid")
    else:
        raise ConfigurationError("grid: required for sweep (--grid)")
    out = _output_dir(config, args)
    reports.preflight(out)
    default_budget = config.eval_budget == 20 * config.n**2
    cells = []
    for n, N in grid:
        cfg = config.with_(n=n, N=N, eval_budget=20 * n * n if default_budget else config.eval_budget)
        cells.append((cfg, run_batch(cfg, args.workers)))
        s = reports.summary_row(n, N, cells[-1][1], cfg.eval_budget)
        print(f"n={n} N={N}: p_hat={s['p_hat']:.4f} [{s['wilson_lo']:.4f}, {s['wilson_hi']:.4f}]")
    reports.emit_experiment(out, config, cells, "sweep", grid=grid)
    return EXIT_OK


def cmd_exact(args):
    out = args.out or f"exact-{args.problem}-{args.n}"
    reports.preflight(out)
    chain = exact.build_chain(args.n, args.problem)
    result = exact.expected_hitting_times(chain, horizon=args.horizon)
    reports.emit_exact(out, chain, result, args.horizon)
    report = exact.verify_drift_identity(chain, result)
    print(f"{args.problem} n={args.n}: E[tau] from uniform start = {result.mean_uniform:.10g} steps; "
          f"drift identity max deviation {report.max_deviation:.3e} -> {out}")
    return EXIT_OK if report.passed else EXIT_CHECK


def _read_cases(path):
    if not os.path.isfile(path):
        raise ConfigurationError(f"cases file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and "kind" not in rows[0]:
        raise ConfigurationError(f"{path}: needs a 'kind' column")
    return [(r["kind"], {k: v for k, v in r.items() if k != "kind" and v not in (None, "")}) for r in rows]


def cmd_verify_bounds(args):
    out = args.out or "bound-checks"
    reports.preflight(out)
    if args.cases:
        checks = [bounds.check_case(kind, **params) for kind, params in _read_cases(args.cases)]
    else:
        checks = [c for rows in bounds.sweep(args.count, args.seed).values() for c in rows]
    reports.emit_bounds(out, checks, args.count, args.seed, args.cases)
    failed = [c for c in checks if not c.satisfied]
    tally = {}
    for c in checks:
        ok, total = tally.get(c.kind, (0, 0))
        tally[c.kind] = (ok + c.satisfied, total + 1)
    for kind, (ok, total) in tally.items():
        print(f"{'PASS' if ok == total else 'FAIL'} {kind}: {ok}/{total} satisfied")
    return EXIT_CHECK if failed else EXIT_OK


def cmd_report(args):
    summary = reports.rebuild_summaries(args.bundle)
    for s in summary:
        print(f"n={s['n']} N={s['N']}: {s['successes']}/{s['trials']} (p_hat={s['p_hat']:.4f})")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="trapzeros", description="(N+N) EA on TrapZeros: simulation and exact checks")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one experiment cell")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("overrides", nargs="*", metavar="key=value")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run a grid of (n, N) cells")
    s.add_argument("--config", required=True)
    s.add_argument("--grid")
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("overrides", nargs="*", metavar="key=value")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("exact", help="exact hitting times of the (1+1) EA")
    s.add_argument("--problem", required=True, choices=("trapzeros", "onemax"))
    s.add_argument("--n", required=True, type=int)
    s.add_argument("--horizon", type=int, default=1000, help="last t of the P(tau <= t) table")
    s.add_argument("--out")
    s.set_defaults(func=cmd_exact)

    s = sub.add_parser("verify-bounds", help="exact checks of the probability inequalities")
    s.add_argument("--cases", help="CSV with a 'kind' column plus parameter columns")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("report", help="recompute summaries of a bundle from trials.csv")
    s.add_argument("--bundle", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigurationError, ResourceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
