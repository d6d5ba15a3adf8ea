import warnings

import pytest
from statsmodels.stats.proportion import proportion_confint

from trapzeros import ExperimentConfig
from trapzeros.core import TrialRecord
from trapzeros.errors import ConfigurationError
from trapzeros.trials import (
    DEFAULT_EPSILON, estimate_solvable_rate, hitting_time_ecdf, run_batch, sweep, wilson_interval,
)


def fake(hit, tau=None, N=1, budget=100):
    evals = tau * N if hit else budget
    return TrialRecord(0, hit, tau if hit else None, evals // N, evals, None, None, None, False, 0)


@pytest.mark.parametrize("k,m", [(0, 100), (100, 100), (25, 100), (3, 2000), (1999, 2000), (1, 1)])
def test_wilson_matches_statsmodels(k, m):
    lo, hi = wilson_interval(k, m)
    ref = proportion_confint(k, m, alpha=0.05, method="wilson")
    assert lo == pytest.approx(ref[0], abs=1e-12) and hi == pytest.approx(ref[1], abs=1e-12)


def test_wilson_examples():
    assert wilson_interval(0, 100)[1] == pytest.approx(0.0370, abs=1e-4)
    assert wilson_interval(100, 100)[0] == pytest.approx(0.9630, abs=1e-4)
    lo, hi = wilson_interval(25, 100)
    assert 0.17 < lo < 0.25 < hi < 0.35
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_rate_counts_hits_within_budget():
    records = [fake(True, 10), fake(True, 60), fake(False)]
    est = estimate_solvable_rate(records, 50)
    assert (est.successes, est.trials, est.budget) == (1, 3, 50)
    assert estimate_solvable_rate(records, 100).successes == 2


def test_rate_is_monotone_in_budget():
    config = ExperimentConfig(problem="trapzeros", n=20, N=2, trials=200, seed=9, eval_budget=4000)
    records = run_batch(config)
    rates = [estimate_solvable_rate(records, b).p_hat for b in range(100, 4001, 300)]
    assert rates == sorted(rates)


def test_rate_is_order_invariant():
    records = [fake(True, t) for t in (5, 9, 40)] + [fake(False)] * 4
    a = estimate_solvable_rate(records, 30)
    b = estimate_solvable_rate(list(reversed(records)), 30)
    assert a == b and a.wilson_lo <= a.p_hat <= a.wilson_hi


def test_rate_needs_records():
    with pytest.raises(ValueError):
        estimate_solvable_rate([], 10)


def test_ecdf_with_censoring():
    e = hitting_time_ecdf([fake(True, 3), fake(True, 3), fake(True, 7), fake(False)])
    assert e.points == [(3, 0.5), (7, 0.75)]
    assert e.censored_mass == 0.25 and e.points[-1][1] + e.censored_mass == 1
    assert (e(2), e(3), e(6), e(100)) == (0.0, 0.5, 0.5, 0.75)


def test_ecdf_all_censored():
    e = hitting_time_ecdf([fake(False)] * 3)
    assert e.points == [] and e.censored_mass == 1.0


def test_batch_is_independent_of_workers():
    config = ExperimentConfig(problem="trapzeros", n=30, N=3, trials=64, seed=123)
    assert run_batch(config, 1) == run_batch(config, 8)


def test_singleton_sweep_reproduces_batch():
    base = ExperimentConfig(problem="trapzeros", n=25, N=2, trials=40, seed=8)
    (row,) = sweep([(25, 2)], base)
    assert row.records == run_batch(base)
    assert row.estimate == estimate_solvable_rate(row.records, base.eval_budget)


def test_sweep_budgets():
    base = ExperimentConfig(problem="onemax", n=10, N=1, trials=5, seed=0)
    rows = sweep([(10, 1), (20, 2)], base)
    assert [r.config.eval_budget for r in rows] == [2000, 8000]
    rows = sweep([(10, 1)], base, budget_rule=lambda n, N: 77 * N)
    assert rows[0].config.eval_budget == 77
    with pytest.raises(ValueError):
        sweep([], base)


def test_cells_use_distinct_streams():
    base = ExperimentConfig(problem="trapzeros", n=20, N=1, trials=20, seed=0)
    a = run_batch(base)
    b = run_batch(base.with_(N=2))
    assert [r.tau for r in a] != [r.tau for r in b]


def test_config_defaults():
    c = ExperimentConfig(problem="trapzeros", n=100, N=1, trials=10)
    assert c.eval_budget == 200_000
    assert round(c.epsilon, 5) == 0.98039 == round(DEFAULT_EPSILON, 5)
    assert c.threshold == 1


@pytest.mark.parametrize("kw", [
    {"problem": "leadingones"}, {"n": 2}, {"N": 0}, {"trials": 0}, {"eval_budget": 3, "N": 4},
    {"epsilon": 0.0}, {"epsilon": 1.5}, {"seed": -1}, {"problem": "onemax", "early_abort": True},
])
def test_config_rejects(kw):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**kw)


def test_config_warns_on_huge_population():
    with pytest.warns(UserWarning):
        ExperimentConfig(problem="trapzeros", n=3, N=28, trials=1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ExperimentConfig(problem="trapzeros", n=3, N=27, trials=1)
