"""Result bundles: trial/summary CSVs, timeline JSONL, plot tables and the manifest.

Every file is a pure function of the manifest (config, grid, tool version),
so a rerun reproduces it byte for byte. No timestamps or host details are
written.
"""

import csv
import json
import os
import tempfile
from collections import defaultdict

import numpy as np

from .config import config_items, format_float
from .core import TrialRecord
from .decomposition import takeover_statistics, timeline_records
from .errors import ConfigurationError
from .trials import estimate_solvable_rate, hitting_time_ecdf

TRIAL_COLUMNS = (
    "experiment_id", "problem", "n", "N", "epsilon", "eval_budget", "trial", "seed", "hit",
    "tau_generations", "evaluations", "first_s0_gen", "first_sstar_gen", "b_full_takeover_gen", "early_aborted",
)
SUMMARY_COLUMNS = ("n", "N", "trials", "successes", "p_hat", "wilson_lo", "wilson_hi", "mean_tau_hits", "budget")
RATE_COLUMNS = ("n", "N", "p_hat", "wilson_lo", "wilson_hi")
ECDF_COLUMNS = ("n", "N", "t", "ecdf", "censored_mass")
TAKEOVER_COLUMNS = ("n", "N", "statistic", "side", "rho", "samples", "mean", "max", "q25", "q50", "q75", "q95")
STATE_COLUMNS = ("state", "fitness", "expected_tau")
DISTRIBUTION_COLUMNS = ("t", "p_tau_le_t")
BOUND_COLUMNS = ("kind", "parameters", "bound", "exact", "satisfied")


def cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def preflight(directory):
    """Fail before any computation if ``directory`` cannot be written."""
    try:
        os.makedirs(directory, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=directory, prefix=".probe-"):
            pass
    except OSError as exc:
        raise ConfigurationError(f"output directory not writable: {directory} ({exc.strerror})") from None


def write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([cell(v) for v in values])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def trial_row(config, r: TrialRecord):
    return {
        "experiment_id": config.experiment_id,
        "problem": config.problem,
        "n": config.n,
        "N": config.N,
        "epsilon": config.epsilon,
        "eval_budget": config.eval_budget,
        "trial": r.stream_index,
        "seed": r.seed,
        "hit": r.hit,
        "tau_generations": r.tau,
        "evaluations": r.evaluations,
        "first_s0_gen": r.first_s0_gen,
        "first_sstar_gen": r.first_sstar_gen,
        "b_full_takeover_gen": r.b_full_takeover_gen,
        "early_aborted": r.early_aborted,
    }


def _opt_int(text):
    return None if text == "" else int(text)


def record_from_row(row) -> TrialRecord:
    """Rebuild the aggregate fields of a trial record from its CSV row."""
    return TrialRecord(
        stream_index=int(row["trial"]),
        hit=row["hit"] == "true",
        tau=_opt_int(row["tau_generations"]),
        generations=int(row["evaluations"]) // int(row["N"]),
        evaluations=int(row["evaluations"]),
        first_s0_gen=_opt_int(row["first_s0_gen"]),
        first_sstar_gen=_opt_int(row["first_sstar_gen"]),
        b_full_takeover_gen=_opt_int(row["b_full_takeover_gen"]),
        early_aborted=row["early_aborted"] == "true",
        seed=int(row["seed"]),
    )


def summary_row(n, N, records, budget):
    est = estimate_solvable_rate(records, budget)
    taus = [r.tau for r in records if r.hit and r.evaluations <= budget]
    return {
        "n": n, "N": N, "trials": est.trials, "successes": est.successes, "p_hat": est.p_hat,
        "wilson_lo": est.wilson_lo, "wilson_hi": est.wilson_hi,
        "mean_tau_hits": float(np.mean(taus)) if taus else None, "budget": est.budget,
    }


def ecdf_rows(n, N, records):
    e = hitting_time_ecdf(records)
    return [{"n": n, "N": N, "t": t, "ecdf": v, "censored_mass": e.censored_mass} for t, v in e.points]


def aggregate_tables(cells):
    """Summary, rate and ECDF rows from ``[(n, N, budget, records), ...]``."""
    summary, rates, ecdf = [], [], []
    for n, N, budget, records in cells:
        s = summary_row(n, N, records, budget)
        summary.append(s)
        rates.append({c: s[c] for c in RATE_COLUMNS})
        ecdf.extend(ecdf_rows(n, N, records))
    rates.sort(key=lambda r: (r["n"], r["N"]))
    return summary, rates, ecdf


def takeover_rows(n, N, records):
    timelines = [r.timeline for r in records if r.timeline is not None]
    if not timelines:
        return []
    stats = takeover_statistics(timelines)
    rows = []
    for name, table in (("eta", stats.eta), ("phi", stats.phi)):
        for t in table:
            rows.append({
                "n": n, "N": N, "statistic": name, "side": t.side, "rho": t.rho, "samples": t.samples,
                "mean": t.mean, "max": t.max, "q25": t.q25, "q50": t.q50, "q75": t.q75, "q95": t.q95,
            })
    return rows


def manifest(command, config=None, **extra):
    from . import __version__

    data = {"tool": "trapzeros", "version": __version__, "command": command}
    if config is not None:
        data["master_seed"] = config.seed
        data["config"] = {key: text for _, key, text in config_items(config)}
    data.update(extra)
    return data


def write_manifest(directory, data, files):
    data = dict(data)
    data["files"] = sorted(files)
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_experiment(directory, config, cells, command="simulate", grid=None):
    """Write the bundle for one or more (n, N) cells of ``config``.

    ``cells`` is a list of (cell config, records). Returns the file names.
    """
    os.makedirs(directory, exist_ok=True)
    trials, timelines, takeover = [], [], []
    for cfg, records in cells:
        trials.extend(trial_row(cfg, r) for r in records)
        takeover.extend(takeover_rows(cfg.n, cfg.N, records))
        for r in records:
            if r.timeline is not None:
                ctx = {"experiment_id": cfg.experiment_id, "n": cfg.n, "N": cfg.N, "trial": r.stream_index}
                timelines.extend(timeline_records(r.timeline, **ctx))
    summary, rates, ecdf = aggregate_tables([(c.n, c.N, c.eval_budget, recs) for c, recs in cells])
    files = {
        "trials.csv": (TRIAL_COLUMNS, trials),
        "summary.csv": (SUMMARY_COLUMNS, summary),
        "rate_by_N.csv": (RATE_COLUMNS, rates),
        "ecdf.csv": (ECDF_COLUMNS, ecdf),
        "takeover.csv": (TAKEOVER_COLUMNS, takeover),
    }
    for name, (columns, rows) in files.items():
        write_csv(os.path.join(directory, name), columns, rows)
    with open(os.path.join(directory, "timeline.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
        for rec in timelines:
            fh.write(json.dumps(rec) + "\n")
    names = list(files) + ["timeline.jsonl", "manifest.json"]
    extra = {"grid": [list(g) for g in grid]} if grid is not None else {}
    write_manifest(directory, manifest(command, config, **extra), names)
    return names


def rebuild_summaries(directory):
    """Recompute summary, rate and ECDF tables from ``trials.csv`` alone."""
    path = os.path.join(directory, "trials.csv")
    if not os.path.isfile(path):
        raise ConfigurationError(f"no trials.csv in bundle {directory}")
    groups = defaultdict(list)
    budgets = {}
    for row in read_csv(path):
        key = (int(row["n"]), int(row["N"]))
        groups[key].append(record_from_row(row))
        budgets[key] = int(row["eval_budget"])
    order = list(groups)  # first-appearance order, as written
    summary, rates, ecdf = aggregate_tables([(n, N, budgets[(n, N)], groups[(n, N)]) for n, N in order])
    write_csv(os.path.join(directory, "summary.csv"), SUMMARY_COLUMNS, summary)
    write_csv(os.path.join(directory, "rate_by_N.csv"), RATE_COLUMNS, rates)
    write_csv(os.path.join(directory, "ecdf.csv"), ECDF_COLUMNS, ecdf)
    return summary


def emit_exact(directory, chain, result, horizon):
    from .exact import state_rows

    os.makedirs(directory, exist_ok=True)
    write_csv(os.path.join(directory, "exact_states.csv"), STATE_COLUMNS, state_rows(chain, result))
    dist = [] if result.cdf is None else [(t, p) for t, p in enumerate(result.cdf)]
    write_csv(os.path.join(directory, "exact_distribution.csv"), DISTRIBUTION_COLUMNS, dist)
    names = ["exact_states.csv", "exact_distribution.csv", "manifest.json"]
    data = manifest("exact", problem=chain.problem.kind, n=chain.n, horizon=horizon,
                    mean_uniform=format_float(result.mean_uniform), residual=format_float(result.residual))
    write_manifest(directory, data, names)
    return names


def emit_bounds(directory, checks, count=None, seed=None, cases=None):
    os.makedirs(directory, exist_ok=True)
    rows = [(c.kind, json.dumps(c.params, sort_keys=True), c.bound, c.exact, c.satisfied) for c in checks]
    write_csv(os.path.join(directory, "bound_checks.csv"), BOUND_COLUMNS, rows)
    names = ["bound_checks.csv", "manifest.json"]
    extra = {"count": count, "seed": seed} if cases is None else {"cases": os.path.basename(cases)}
    write_manifest(directory, manifest("verify-bounds", **extra), names)
    return names
