"""Monte Carlo harness: trial batches, solvable rates, ECDFs and (n, N) sweeps."""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import List, Optional

import numpy as np

from .core import TrialRecord, run_trial
from .decomposition import takeover_statistics, takeover_threshold
from .errors import ConfigurationError
from .problems import PROBLEM_IDS, ProblemSpec

DEFAULT_C = 0.1
DEFAULT_EPSILON = 5 / (5 + DEFAULT_C)
Z95 = NormalDist().inv_cdf(0.975)

__all__ = [
    "ExperimentConfig", "TrialRecord", "SolvableRateEstimate", "ECDF", "SweepRow",
    "run_batch", "estimate_solvable_rate", "wilson_interval", "hitting_time_ecdf", "sweep",
]


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "trapzeros"
    n: int = 100
    N: int = 1
    trials: int = 100
    eval_budget: Optional[int] = None  # defaults to 20 n^2
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    early_abort: bool = False
    experiment_id: str = "experiment"
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.problem not in PROBLEM_IDS:
            raise ConfigurationError(f"problem: '{self.problem}' not in {PROBLEM_IDS}")
        ProblemSpec(self.problem, self.n)  # validates n
        if self.N < 1:
            raise ConfigurationError(f"N: must be >= 1, got {self.N}")
        if self.trials < 1:
            raise ConfigurationError(f"trials: must be >= 1, got {self.trials}")
        if self.eval_budget is None:
            object.__setattr__(self, "eval_budget", 20 * self.n**2)
        if self.eval_budget < self.N:
            raise ConfigurationError(f"eval_budget: must be >= N={self.N}, got {self.eval_budget}")
        if not 0 < self.epsilon <= 1:
            raise ConfigurationError(f"epsilon: must lie in (0, 1], got {self.epsilon}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed: must lie in [0, 2^64), got {self.seed}")
        if self.early_abort and self.problem != "trapzeros":
            raise ConfigurationError("early_abort: only defined for trapzeros")
        if self.N > self.n**3:
            warnings.warn(f"N={self.N} exceeds n^3={self.n ** 3}; population size should be polynomial in n")

    @property
    def problem_spec(self):
        return ProblemSpec(self.problem, self.n)

    @property
    def threshold(self):
        return takeover_threshold(self.epsilon, self.N)

    def early_abort_escape_bound(self):
        """Per-generation escape bound N * n^-L for trials cut short by early abort."""
        return self.N * float(self.n) ** (-self.problem_spec.block_len)

    def with_(self, **changes):
        return replace(self, **changes)


def run_batch(config: ExperimentConfig, workers: int = 1) -> List[TrialRecord]:
    """Run ``config.trials`` trials; trial i uses stream index i.

    The compiled trial loop releases the GIL, so ``workers`` threads run
    trials concurrently. Results do not depend on ``workers``.
    """
    indices = range(config.trials)
    if workers <= 1:
        return [run_trial(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(config, i), indices))


def wilson_interval(successes, trials, z=Z95):
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials**2)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class SolvableRateEstimate:
    successes: int
    trials: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    budget: int


def estimate_solvable_rate(records, budget) -> SolvableRateEstimate:
    """Fraction of trials holding the optimum within ``budget`` evaluations.

    A hit's evaluation count is tau * N, so it counts when that is <= budget.
    """
    records = list(records)
    if not records:
        raise ValueError("no trial records")
    k = sum(r.hit and r.evaluations <= budget for r in records)
    lo, hi = wilson_interval(k, len(records))
    p = k / len(records)
    return SolvableRateEstimate(k, len(records), p, min(lo, p), max(hi, p), int(budget))


@dataclass
class ECDF:
    points: List[tuple]  # (t, fraction of all trials with tau <= t)
    censored_mass: float
    trials: int

    def __call__(self, t):
        value = 0.0
        for s, v in self.points:
            if s > t:
                break
            value = v
        return value


def hitting_time_ecdf(records) -> ECDF:
    """Right-continuous ECDF over observed hitting times.

    Trials that never hit are reported as ``censored_mass``, so the last
    ECDF value plus the censored mass is 1.
    """
    records = list(records)
    if not records:
        raise ValueError("no trial records")
    taus = np.sort([r.tau for r in records if r.hit])
    m = len(records)
    values, counts = np.unique(taus, return_counts=True)
    cum = np.cumsum(counts)
    points = [(int(t), c / m) for t, c in zip(values, cum)]
    return ECDF(points, (m - len(taus)) / m, m)


@dataclass
class SweepRow:
    n: int
    N: int
    estimate: SolvableRateEstimate
    mean_tau_hits: Optional[float]
    config: ExperimentConfig = field(repr=False)
    records: List[TrialRecord] = field(default_factory=list, repr=False)
    takeover: object = field(default=None, repr=False)


def summarize(config, records):
    est = estimate_solvable_rate(records, config.eval_budget)
    hits = [r.tau for r in records if r.hit]
    timelines = [r.timeline for r in records if r.timeline is not None]
    stats = takeover_statistics(timelines) if timelines else None
    return SweepRow(config.n, config.N, est, float(np.mean(hits)) if hits else None, config, records, stats)


def sweep(grid, base: ExperimentConfig, workers: int = 1, budget_rule=None) -> List[SweepRow]:
    """One row per (n, N) cell.

    Trial streams are keyed by (seed, problem, n, N, trial) so cells are
    independent and a singleton grid reproduces ``run_batch``. When the base
    config carries the default budget, each cell gets 20 n^2 unless
    ``budget_rule(n, N)`` says otherwise.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    rows = []
    for n, N in grid:
        budget = budget_rule(n, N) if budget_rule else (20 * n * n if base.eval_budget == 20 * base.n**2 else base.eval_budget)
        cfg = base.with_(n=n, N=N, eval_budget=budget)
        rows.append(summarize(cfg, run_batch(cfg, workers)))
    return rows
