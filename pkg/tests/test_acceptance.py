"""Acceptance criteria A1-A9, one verdict line each.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python tests/test_acceptance.py``);
the verdicts are also collected in the "acceptance criteria" section of the
terminal summary.
"""

import filecmp
import math
import os
import sys
from fractions import Fraction

import numba
import numpy as np
import pytest

from trapzeros import ExperimentConfig, Genome, PopulationState, ProblemSpec, write_config
from trapzeros import _kernels as K
from trapzeros.bounds import KINDS, sweep as bound_sweep
from trapzeros.cli import main as cli_main
from trapzeros.decomposition import classify_population
from trapzeros.exact import (
    build_chain, distribution_curve, expected_hitting_times, expected_truncated, hitting_time_cdf,
    verify_drift_bound, verify_drift_identity,
)
from trapzeros.problems import SchemaClass, classify_schema, fitness_range, schema_from_fitness
from trapzeros.trials import estimate_solvable_rate, run_batch, wilson_interval

from _reference import bit_matrix, classify, naive_classify_rows, naive_fitness_row

N_GENES = 100
SEED = 20240601
FULL_A4 = os.environ.get("TRAPZEROS_FULL_A4") == "1"


def verdict(ok):
    return "PASS" if ok else "FAIL"


@pytest.fixture(scope="module")
def n1_records():
    config = ExperimentConfig(problem="trapzeros", n=N_GENES, N=1, trials=2000, seed=SEED, early_abort=True)
    return config, run_batch(config)


# ---------------------------------------------------------------- A1


def test_a1_population_size_ordering(n1_records, report_line):
    cells = {1: n1_records}
    for N in (5, 44):
        config = ExperimentConfig(problem="trapzeros", n=N_GENES, N=N, trials=2000, seed=SEED, early_abort=True)
        cells[N] = (config, run_batch(config))
    assert 44 == 2 * math.ceil(N_GENES / math.log(N_GENES))
    est = {N: estimate_solvable_rate(recs, cfg.eval_budget) for N, (cfg, recs) in cells.items()}
    bias = max(cfg.early_abort_escape_bound() * cfg.eval_budget for cfg, _ in cells.values())
    ok = (est[1].p_hat >= 0.05 and est[5].p_hat >= 0.02 and est[44].p_hat <= 0.005
          and est[44].wilson_hi < min(est[1].wilson_lo, est[5].wilson_lo))
    detail = ", ".join(f"N={N}: {e.p_hat:.4f} [{e.wilson_lo:.4f}, {e.wilson_hi:.4f}]" for N, e in est.items())
    report_line(f"A1 {verdict(ok)}: p_hat at n=100, budget 20n^2: {detail}; early-abort bias <= {bias:.1e}")
    assert ok


# ---------------------------------------------------------------- A2


def test_a2_conditioning_structure(n1_records, report_line):
    config, records = n1_records
    starts_11 = [r for r in records if r.timeline.segments and r.timeline.segments[0].side == "A"
                 and r.timeline.segments[0].entry == 1]
    frac_11 = len(starts_11) / len(records)
    sstar_first = [r for r in starts_11 if r.first_sstar_gen is not None
                   and (r.first_s0_gen is None or r.first_sstar_gen < r.first_s0_gen)]
    frac_sstar = len(sstar_first) / len(starts_11)
    reached = [r for r in records if r.first_sstar_gen is not None]
    frac_hit = sum(r.hit for r in reached) / len(reached)
    ok = abs(frac_11 - 0.25) <= 0.02 and frac_sstar >= 0.3 and frac_hit >= 0.99
    report_line(f"A2 {verdict(ok)}: prefix 11 at start {frac_11:.4f}; S* before S0 among those {frac_sstar:.4f} "
                f"({len(sstar_first)}/{len(starts_11)}); hit after reaching S* {frac_hit:.4f} ({len(reached)} trials)")
    assert ok


# ---------------------------------------------------------------- A3


def test_a3_large_population_takeover(report_line):
    config = ExperimentConfig(problem="trapzeros", n=N_GENES, N=44, trials=1000, seed=SEED)
    records = run_batch(config)
    G = 5 * math.log(44) * math.log(math.log(N_GENES))
    fast = [r for r in records if r.b_full_takeover_gen is not None and r.b_full_takeover_gen - 1 <= G]
    escaped = sum(r.first_sstar_gen is not None for r in fast)
    frac = len(fast) / len(records)
    ok = frac >= 0.9 and escaped == 0
    report_line(f"A3 {verdict(ok)}: {frac:.3f} of trials entirely in S0 within {G:.1f} generations; "
                f"{escaped} of them later produced an S* member (budget {config.eval_budget})")
    assert ok


# ---------------------------------------------------------------- A4


def dkw_epsilon(m, alpha=0.001):
    return math.sqrt(math.log(2 / alpha) / (2 * m))


def sup_distance(samples, chain, horizon=None):
    """sup_t |ECDF(t) - P(tau <= t)| over t <= horizon (all t when None).

    Both curves are integer step functions, so the supremum is attained at a
    sample value or one step before it.
    """
    m = len(samples)
    values, counts = np.unique(samples, return_counts=True)
    cum = np.cumsum(counts) / m
    prev = np.concatenate([[0.0], cum[:-1]])
    if horizon is None:
        exact_at = hitting_time_cdf(chain, values)
        exact_before = hitting_time_cdf(chain, np.maximum(values - 1, 0))
        exact_before[values == 0] = 0.0
        return float(max(np.abs(cum - exact_at).max(), np.abs(prev - exact_before).max()))
    curve = distribution_curve(chain, horizon)
    keep = values <= horizon
    v, c, p = values[keep], cum[keep], prev[keep]
    before = np.where(v > 0, curve[np.maximum(v - 1, 0)], 0.0)
    tail = c[-1] if c.size else 0.0
    return float(max(np.abs(c - curve[v]).max(initial=0), np.abs(p - before).max(initial=0),
                     abs(tail - curve[horizon])))


def literal_case(problem, n, trials=10_000):
    """Uncensored runs; chain steps are simulated generations minus one."""
    chain = build_chain(n, problem)
    exact = expected_hitting_times(chain)
    config = ExperimentConfig(problem=problem, n=n, N=1, trials=trials, seed=SEED, eval_budget=10**12)
    records = run_batch(config)
    assert all(r.hit for r in records)
    steps = np.array([r.tau - 1 for r in records])
    se = steps.std(ddof=1) / math.sqrt(trials)
    z = abs(steps.mean() - exact.mean_uniform) / se if se > 0 else 0.0
    sup = sup_distance(steps, chain)
    ok = z <= 3 and sup <= dkw_epsilon(trials)
    return ok, f"{problem} n={n}: mean {steps.mean():.6g} vs {exact.mean_uniform:.6g} ({z:.2f} SE), DKW sup {sup:.4f}"


def censored_case(n, budget, trials=10_000):
    """Runs stopped at ``budget`` generations; compares E[min(tau, B)] and the band on [0, B-1]."""
    chain = build_chain(n, "trapzeros")
    config = ExperimentConfig(problem="trapzeros", n=n, N=1, trials=trials, seed=SEED, eval_budget=budget)
    records = run_batch(config)
    steps = np.array([r.tau - 1 if r.hit else budget for r in records])
    target = expected_truncated(chain, budget)
    se = steps.std(ddof=1) / math.sqrt(trials)
    z = abs(steps.mean() - target) / se
    sup = sup_distance(steps, chain, horizon=budget - 1)
    ok = z <= 3 and sup <= dkw_epsilon(trials)
    return ok, (f"trapzeros n={n} censored at {budget}: E[min(tau,B)] {steps.mean():.6g} vs {target:.6g} "
                f"({z:.2f} SE), DKW sup {sup:.4f}")


def test_a4_exact_oracle_agreement(report_line):
    results = [literal_case("onemax", n) for n in (2, 4, 8)]
    results.append(literal_case("trapzeros", 8))
    if FULL_A4:
        results += [literal_case("trapzeros", 10), literal_case("trapzeros", 12)]
        note = "literal n=10,12 run"
    else:
        results += [censored_case(10, 20_000), censored_case(12, 10_000)]
        note = "n=10,12 literal run infeasible (E[tau] 6.4e6 and 2.8e8); censored variant, set TRAPZEROS_FULL_A4=1 for literal"
    ok = all(r[0] for r in results)
    report_line(f"A4 {verdict(ok)}: DKW eps {dkw_epsilon(10_000):.4f}; " + "; ".join(r[1] for r in results) + f" [{note}]")
    assert ok


# ---------------------------------------------------------------- A5


def test_a5_hand_oracle(report_line):
    value = expected_hitting_times(build_chain(2, "onemax")).from_state(0b00)
    # independent check: E1 = 1 + 3/4 E1, E0 = 1 + 1/4 E0 + 1/2 E1
    e1 = Fraction(1) / (1 - Fraction(3, 4))
    e0 = (1 + Fraction(1, 2) * e1) / (1 - Fraction(1, 4))
    ok = abs(value - 16 / 7) <= 1e-9
    report_line(f"A5 {verdict(ok)}: E[tau | 00] = {value:.12f}, stated 16/7 = {16 / 7:.12f}; "
                f"independent 3-state solve gives {e0} (see ledger: stated value is a defect)")
    assert abs(value - float(e0)) <= 1e-12
    assert ok


# ---------------------------------------------------------------- A6


def test_a6_drift_identities(report_line):
    worst_identity = worst_gap = 0.0
    ok = True
    for problem, n in [("onemax", 2), ("onemax", 4), ("onemax", 8), ("trapzeros", 8), ("trapzeros", 10), ("trapzeros", 12)]:
        chain = build_chain(n, problem)
        result = expected_hitting_times(chain)
        ident = verify_drift_identity(chain, result)
        bound = verify_drift_bound(chain, result.extended, 1.0, result.extended)
        worst_identity = max(worst_identity, ident.max_deviation)
        worst_gap = max(worst_gap, bound.max_gap / max(1.0, result.expected.max()))
        ok &= ident.passed and bound.applicable and bool(bound.holds) and bound.max_gap / max(1.0, result.expected.max()) < 1e-9
    report_line(f"A6 {verdict(ok)}: max drift-identity deviation {worst_identity:.2e}; "
                f"drift bound with V = E[tau], c_l = 1: max relative gap {worst_gap:.2e}")
    assert ok


# ---------------------------------------------------------------- A7


def test_a7_bound_suite(report_line):
    result = bound_sweep(1000, seed=0)
    violations = {k: sum(not c.satisfied for c in rows) for k, rows in result.items()}
    ok = set(result) == set(KINDS) and all(len(rows) == 1000 for rows in result.values()) and not any(violations.values())
    report_line(f"A7 {verdict(ok)}: {sum(violations.values())} violations in 1000 tuples x {len(result)} kinds")
    assert ok


# ---------------------------------------------------------------- A8


@numba.njit(cache=True)
def _all_populations_agree(B, n, L, N):
    """Compare the kernel classifier with the reference on every ordered population."""
    size = B.shape[0]
    count = size**N
    idx = np.empty(N, dtype=np.int64)
    words = np.empty((N, 1), dtype=np.uint64)
    fits = np.empty(N, dtype=np.int64)
    for code in range(count):
        c = code
        for k in range(N):
            idx[k] = c % size
            c //= size
            words[k, 0] = np.uint64(idx[k])
            fits[k] = naive_fitness_row(B[idx[k]], L)
        side, rho, loia, loib, in_s0, in_star = K.classify(words, fits, n, L)
        r = naive_classify_rows(B, idx, L)
        if side != r[0] or loia != r[2] or loib != r[3] or in_s0 != r[4] or in_star != r[5]:
            return code
        if side != 0 and rho != r[1]:
            return code
    return -1


def test_a8_exhaustive_checks(report_line):
    ok = True
    genomes = 0
    for n in range(3, 15):
        spec = ProblemSpec.trapzeros(n)
        B = bit_matrix(n)
        f = K.fitness_table(n, K.TRAPZEROS, spec.block_len)
        naive = np.array([naive_fitness_row(b, spec.block_len) for b in B])
        ok &= bool(np.array_equal(f, naive))
        ok &= int(np.sum(f == f.max())) == 1 and f.max() == spec.optimum_value
        heads = B[:, 0] * 2 + B[:, 1]
        star = (B[:, : spec.block_len] == 1).all(axis=1)
        labels = np.where(heads == 3, np.where(star, 0, 1), np.where(heads == 0, 2, np.where(heads == 2, 3, 4)))
        ranges = []
        for lab, cls in enumerate([SchemaClass.SSTAR, SchemaClass.S1_NON_STAR, SchemaClass.S0,
                                   SchemaClass.PREFIX10, SchemaClass.PREFIX01]):
            vals = f[labels == lab]
            lo, hi = fitness_range(cls, spec)
            ok &= bool(vals.size > 0 and lo <= vals.min() and vals.max() <= hi)
            ranges.append((vals.min(), vals.max()))
            for v in np.unique(vals):
                ok &= schema_from_fitness(int(v), spec) is cls
        ranges.sort()
        ok &= all(a[1] < b[0] for a, b in zip(ranges, ranges[1:]))
        genomes += 1 << n
    populations = 0
    for n in range(3, 9):
        L = ProblemSpec.trapzeros(n).block_len
        B = bit_matrix(n)
        for N in (1, 2, 3):
            bad = _all_populations_agree(B, n, L, N)
            ok &= bad == -1
            populations += (1 << n) ** N
    # the public wrapper on Genome objects, against the list-based reference
    rng = np.random.default_rng(0)
    for _ in range(2000):
        n = int(rng.integers(3, 9))
        N = int(rng.integers(1, 4))
        spec = ProblemSpec.trapzeros(n)
        bits = rng.integers(0, 2, size=(N, n))
        pop = PopulationState.from_genomes([Genome.from_bits(b) for b in bits], spec)
        pclass, counts = classify_population(pop, spec)
        ok &= (pclass.side, pclass.rho, counts.loia, counts.loib) == classify([list(b) for b in bits], spec.block_len)
        ok &= all(classify_schema(Genome.from_bits(b), spec) is schema_from_fitness(spec.fitness(Genome.from_bits(b)), spec) for b in bits)
    report_line(f"A8 {verdict(ok)}: {genomes} genomes (n=3..14) and {populations} ordered populations (n<=8, N<=3) checked")
    assert ok


# ---------------------------------------------------------------- A9


def test_a9_determinism(tmp_path, report_line):
    cfg = ExperimentConfig(problem="trapzeros", n=40, N=3, trials=200, seed=SEED, experiment_id="a9")
    path = tmp_path / "a9.cfg"
    write_config(cfg, path)
    dirs = {}
    codes = []
    for label, args in [("w1", ["--config", str(path), "--workers", "1"]),
                        ("w8", ["--config", str(path), "--workers", "8"])]:
        dirs[label] = tmp_path / label
        codes.append(cli_main(["sweep", *args, "--grid", "40:1,40:3,60:5", "--out", str(dirs[label])]))
    dirs["rerun"] = tmp_path / "rerun"
    codes.append(cli_main(["sweep", "--config", str(dirs["w1"] / "manifest.json"), "--workers", "8",
                           "--out", str(dirs["rerun"])]))
    names = sorted(os.listdir(dirs["w1"]))
    same = all(
        sorted(os.listdir(d)) == names and filecmp.cmpfiles(dirs["w1"], d, names, shallow=False)[0] == names
        for d in dirs.values()
    )
    ok = codes == [0, 0, 0] and same
    report_line(f"A9 {verdict(ok)}: {len(names)} files byte-identical across workers 1, 8 and a rerun from the manifest")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
