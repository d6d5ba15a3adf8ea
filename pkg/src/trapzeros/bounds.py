"""Exact checks of the probability inequalities used in the runtime proofs.

Every "exact" value is a binomial tail summed term by term in mpmath at
``DPS`` decimal digits; thresholds such as ``(1 - psi) k p`` are compared
with integers in rational arithmetic so no rounding decides which terms
enter a tail.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict

import mpmath
import numpy as np

from .errors import ConfigurationError

DPS = 40
MARGIN = 1e-12

KINDS = (
    "ChernoffLower", "ChernoffUpper1", "ChernoffUpper2", "Chebyshev", "Markov",
    "TakeoverGrowthA", "TakeoverGrowthB", "UpgradeProbA",
)
CHERNOFF_SIDES = {"lower": "ChernoffLower", "upper_exp": "ChernoffUpper1", "upper_poisson": "ChernoffUpper2"}


@dataclass(frozen=True)
class BoundCheck:
    kind: str
    params: Dict[str, float] = field(compare=False)
    bound: float
    exact: float
    satisfied: bool

    def row(self):
        return {"kind": self.kind, **self.params, "bound": self.bound, "exact": self.exact, "satisfied": self.satisfied}


@dataclass(frozen=True)
class Binomial:
    """Binomial(k, p); p of 0 or 1 gives a degenerate distribution."""

    k: int
    p: float

    def __post_init__(self):
        if self.k < 0 or not 0 <= self.p <= 1:
            raise ConfigurationError(f"invalid binomial parameters k={self.k}, p={self.p}")

    @property
    def mean(self):
        return Fraction(self.p) * self.k

    @property
    def variance(self):
        q = Fraction(self.p)
        return self.k * q * (1 - q)

    def pmf(self, i):
        with mpmath.workdps(DPS):
            p = mpmath.mpf(self.p)
            return mpmath.binomial(self.k, i) * p**i * (1 - p) ** (self.k - i)

    def mass(self, lo, hi):
        """P(lo <= X <= hi), summed exactly over the integers in range."""
        lo, hi = max(lo, 0), min(hi, self.k)
        with mpmath.workdps(DPS):
            if lo > hi:
                return mpmath.mpf(0)
            p = mpmath.mpf(self.p)
            if p == 0:
                return mpmath.mpf(1 if lo == 0 else 0)
            if p == 1:
                return mpmath.mpf(1 if hi == self.k else 0)
            term = self.pmf(lo)
            ratio = p / (1 - p)
            total = term
            for i in range(lo, hi):
                term = term * (self.k - i) / (i + 1) * ratio
                total += term
            return total

    def below(self, a):
        """P(X < a) for a rational or float threshold ``a``."""
        return self.mass(0, math.ceil(Fraction(a)) - 1)

    def above(self, a):
        """P(X > a)."""
        return self.mass(math.floor(Fraction(a)) + 1, self.k)

    def at_least(self, a):
        return self.mass(math.ceil(Fraction(a)), self.k)


def _check(kind, params, bound, exact, ok):
    return BoundCheck(kind, params, float(bound), float(exact), bool(ok))


def chernoff_check(k, p, psi, side="lower") -> BoundCheck:
    """Chernoff tail of a sum of k Bernoulli(p) variables against its bound.

    ``side`` is "lower" (0 < psi < 1), "upper_exp" (0 < psi <= 2e - 1) or
    "upper_poisson" (psi > 0). The inequalities are strict; a margin of
    ``MARGIN`` absorbs rounding.
    """
    if side not in CHERNOFF_SIDES:
        raise ConfigurationError(f"side: '{side}' not in {tuple(CHERNOFF_SIDES)}")
    if k < 1 or not 0 < p < 1:
        raise ConfigurationError(f"need k >= 1 and 0 < p < 1, got k={k}, p={p}")
    if side == "lower" and not 0 < psi < 1:
        raise ConfigurationError(f"psi: lower side needs 0 < psi < 1, got {psi}")
    if side == "upper_exp" and not 0 < psi <= 2 * math.e - 1:
        raise ConfigurationError(f"psi: upper_exp side needs 0 < psi <= 2e-1, got {psi}")
    if side == "upper_poisson" and not psi > 0:
        raise ConfigurationError(f"psi: upper_poisson side needs psi > 0, got {psi}")
    X = Binomial(k, p)
    with mpmath.workdps(DPS):
        mu = mpmath.mpf(k) * mpmath.mpf(p)
        ps = mpmath.mpf(psi)
        if side == "lower":
            exact = X.below((1 - Fraction(psi)) * X.mean)
            bound = mpmath.exp(-mu * ps**2 / 2)
        elif side == "upper_exp":
            exact = X.above((1 + Fraction(psi)) * X.mean)
            bound = mpmath.exp(-mu * ps**2 / 4)
        else:
            exact = X.above((1 + Fraction(psi)) * X.mean)
            bound = (mpmath.exp(ps) / (1 + ps) ** (1 + ps)) ** mu
        ok = exact < bound + MARGIN
    return _check(CHERNOFF_SIDES[side], {"k": k, "p": p, "psi": psi}, bound, exact, ok)


def chebyshev_check(dist: Binomial, r) -> BoundCheck:
    """P(|X - E X| >= r sd) against 1 / r^2."""
    if not r > 0:
        raise ConfigurationError(f"r: must be positive, got {r}")
    mu, var = dist.mean, dist.variance
    r2 = Fraction(r) ** 2
    # |x - mu| >= r sd  <=>  (x - mu)^2 >= r^2 var, decided in rationals
    with mpmath.workdps(DPS):
        exact = mpmath.mpf(0)
        if var > 0:
            lo = [x for x in range(dist.k + 1) if x <= mu and (x - mu) ** 2 >= r2 * var]
            hi = [x for x in range(dist.k + 1) if x > mu and (x - mu) ** 2 >= r2 * var]
            if lo:
                exact += dist.mass(0, max(lo))
            if hi:
                exact += dist.mass(min(hi), dist.k)
        bound = 1 / mpmath.mpf(r) ** 2
        ok = exact <= bound + MARGIN
    return _check("Chebyshev", {"k": dist.k, "p": dist.p, "r": r}, bound, exact, ok)


def markov_check(dist: Binomial, a) -> BoundCheck:
    """P(X >= a) against E[X] / a."""
    if not a > 0:
        raise ConfigurationError(f"a: must be positive, got {a}")
    with mpmath.workdps(DPS):
        exact = dist.at_least(a)
        bound = mpmath.mpf(dist.mean.numerator) / dist.mean.denominator / mpmath.mpf(a)
        ok = exact <= bound + MARGIN
    return _check("Markov", {"k": dist.k, "p": dist.p, "a": a}, bound, exact, ok)


def takeover_growth_check(x_t, h, c, side="A") -> BoundCheck:
    """One-generation growth of local-optimum copies.

    Each of the ``x_t`` copies independently yields a new copy with
    probability ``h`` and all of them are kept, so the gain is
    Z ~ Binomial(x_t, h). The claimed bound is
    P(Z > c h x_t) > 1 - (1 - h) / ((1 - c)^2 x_t h); a non-positive bound
    is vacuous. The B side is the same model.
    """
    if side not in ("A", "B"):
        raise ConfigurationError(f"side: '{side}' not in ('A', 'B')")
    if x_t < 1 or not 0 < h < 1 or not 0 < c < 1:
        raise ConfigurationError(f"need x_t >= 1, 0 < h < 1, 0 < c < 1; got {x_t}, {h}, {c}")
    Z = Binomial(x_t, h)
    with mpmath.workdps(DPS):
        exact = Z.above(Fraction(c) * Fraction(h) * x_t)
        hh, cc = mpmath.mpf(h), mpmath.mpf(c)
        bound = 1 - (1 - hh) / ((1 - cc) ** 2 * x_t * hh)
        ok = bound <= 0 or exact + MARGIN > bound
    return _check(f"TakeoverGrowth{side}", {"x_t": x_t, "h": h, "c": c}, bound, exact, ok)


def identity_copy_probability(n):
    """(1 - 1/n)^n, the chance that mutation changes nothing."""
    return (1 - 1 / n) ** n


@dataclass(frozen=True)
class UpgradeProbability:
    u: float
    threshold: int  # ceil(eps N)
    check: BoundCheck


def upgrade_prob_A(rho, epsilon, N, n) -> UpgradeProbability:
    """Chance that ceil(eps N) copies at distance rho produce an improvement.

    u = 1 - [1 - (1/n)(1 - 1/n)^rho]^ceil(eps N); the check confirms
    1/u <= 1 + e^2 n / ceil(eps N).
    """
    if n < 3 or not 0 <= rho <= n - 2:
        raise ConfigurationError(f"need n >= 3 and 0 <= rho <= n-2, got n={n}, rho={rho}")
    if not 0 < epsilon <= 1 or N < 1:
        raise ConfigurationError(f"need 0 < epsilon <= 1 and N >= 1, got {epsilon}, {N}")
    m = math.ceil(Fraction(epsilon) * N)
    with mpmath.workdps(DPS):
        q = (1 / mpmath.mpf(n)) * (1 - 1 / mpmath.mpf(n)) ** rho
        u = -mpmath.expm1(m * mpmath.log1p(-q))
        bound = 1 + mpmath.e**2 * n / m
        ok = 1 / u <= bound + MARGIN
    params = {"rho": rho, "epsilon": epsilon, "N": N, "n": n}
    return UpgradeProbability(float(u), m, _check("UpgradeProbA", params, bound, 1 / u, ok))


def check_case(kind, **params) -> BoundCheck:
    """Dispatch a single check by kind name."""
    if kind in CHERNOFF_SIDES.values():
        side = {v: k for k, v in CHERNOFF_SIDES.items()}[kind]
        return chernoff_check(int(params["k"]), float(params["p"]), float(params["psi"]), side)
    if kind == "Chebyshev":
        return chebyshev_check(Binomial(int(params["k"]), float(params["p"])), float(params["r"]))
    if kind == "Markov":
        return markov_check(Binomial(int(params["k"]), float(params["p"])), float(params["a"]))
    if kind in ("TakeoverGrowthA", "TakeoverGrowthB"):
        return takeover_growth_check(int(params["x_t"]), float(params["h"]), float(params["c"]), kind[-1])
    if kind == "UpgradeProbA":
        return upgrade_prob_A(int(params["rho"]), float(params["epsilon"]), int(params["N"]), int(params["n"])).check
    raise ConfigurationError(f"kind: '{kind}' not in {KINDS}")


def random_cases(kind, count=1000, seed=0, max_k=400):
    """``count`` parameter dicts drawn across the stated range of ``kind``."""
    if kind not in KINDS:
        raise ConfigurationError(f"kind: '{kind}' not in {KINDS}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(KINDS.index(kind),)))
    cases = []
    for _ in range(count):
        k = int(rng.integers(1, max_k + 1))
        p = float(rng.uniform(1e-6, 1 - 1e-6))
        if kind == "ChernoffLower":
            c = {"k": k, "p": p, "psi": float(rng.uniform(1e-6, 1 - 1e-9))}
        elif kind == "ChernoffUpper1":
            c = {"k": k, "p": p, "psi": float(rng.uniform(1e-6, 2 * math.e - 1))}
        elif kind == "ChernoffUpper2":
            c = {"k": k, "p": p, "psi": float(np.exp(rng.uniform(math.log(1e-4), math.log(50))))}
        elif kind == "Chebyshev":
            p = float(rng.choice([0.0, 1.0])) if rng.random() < 0.02 else p
            c = {"k": k, "p": p, "r": float(np.exp(rng.uniform(math.log(0.1), math.log(20))))}
        elif kind == "Markov":
            c = {"k": k, "p": p, "a": float(rng.uniform(1e-3, k + 1))}
        elif kind.startswith("TakeoverGrowth"):
            c = {"x_t": k, "h": p, "c": float(rng.uniform(1e-6, 1 - 1e-6))}
        else:
            n = int(rng.integers(3, 1001))
            c = {"rho": int(rng.integers(0, n - 1)), "epsilon": float(rng.uniform(1e-6, 1)), "N": int(rng.integers(1, 10_001)), "n": n}
        cases.append(c)
    return cases


def sweep(count=1000, seed=0, kinds=KINDS):
    """Run ``count`` random checks per kind; returns {kind: [BoundCheck, ...]}."""
    return {kind: [check_case(kind, **c) for c in random_cases(kind, count, seed)] for kind in kinds}
