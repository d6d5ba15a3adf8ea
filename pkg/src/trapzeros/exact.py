"""Exact absorbing-chain analysis of the (1+1) EA on small problem sizes.

A state is a genome encoded as an integer whose bit ``i`` holds position
``i`` (so ``x1`` is the least significant bit). The chain step is one
generation of the N=1 EA: mutate, then accept the offspring iff its fitness
is not worse. The global optimum is the only absorbing state.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from . import _kernels as K
from .errors import NumericalError, ResourceError
from .problems import ProblemSpec

MAX_EXACT_N = 16
DENSE_LEVEL_LIMIT = 4096
DENSE_MATRIX_LIMIT = 4096
RESIDUAL_TOL = 1e-9
TINY = 1e-280  # flushed to zero: subnormal operands slow BLAS down a hundredfold
EXTENDED_MAX_N = 14  # drift residuals in long double up to here


@dataclass
class ChainModel:
    problem: ProblemSpec
    fitness: np.ndarray  # f(x) for every state x
    weights: np.ndarray  # probability of each flip mask
    optimum: int

    @property
    def n(self):
        return self.problem.n

    @property
    def size(self):
        return self.fitness.shape[0]

    def transition_row(self, x):
        """Reachable states of ``x`` and their probabilities; the self-loop comes last."""
        return K.transition_row(int(x), self.fitness, self.weights)

    def matrix(self):
        """Dense transition matrix P[x, y]."""
        if self.size > DENSE_MATRIX_LIMIT:
            raise ResourceError(f"dense matrix of {self.size} states exceeds {DENSE_MATRIX_LIMIT}")
        P = np.zeros((self.size, self.size))
        for x in range(self.size):
            ys, ps = self.transition_row(x)
            P[x, ys] = ps
        return P

    def levels(self):
        """(fitness value, states) pairs in decreasing fitness."""
        order = np.argsort(-self.fitness, kind="stable")
        values, starts = np.unique(-self.fitness[order], return_index=True)
        bounds = list(starts) + [self.size]
        return [(-int(v), np.sort(order[bounds[i]: bounds[i + 1]])) for i, v in enumerate(values)]

    def state_label(self, x):
        return format(int(x), f"0{(self.n + 3) // 4}x")


def build_chain(n, problem="onemax") -> ChainModel:
    if isinstance(problem, str):
        problem = ProblemSpec(problem, n)
    if problem.n != n:
        raise ValueError(f"problem size {problem.n} does not match n={n}")
    if n > MAX_EXACT_N:
        raise ResourceError(f"exact chain limited to n <= {MAX_EXACT_N}, got n={n}")
    f = K.fitness_table(n, problem.code, problem.block_len)
    top = np.flatnonzero(f == f.max())
    if top.size != 1:
        raise NumericalError(f"expected a unique optimum, found {top.size}")
    return ChainModel(problem, f, K.mask_weights(n), int(top[0]))


@dataclass
class ExactResult:
    expected: np.ndarray  # E[tau | start = x] for every state x
    mean_uniform: float  # E[tau] from a uniformly random start
    residual: float  # max |drift - 1| over transient states
    cdf: Optional[np.ndarray] = field(default=None, repr=False)  # P(tau <= t), t = 0..horizon
    extended: Optional[np.ndarray] = field(default=None, repr=False)  # long double copy of ``expected``

    def from_state(self, x):
        return float(self.expected[int(x)])


def _solve_level(chain, V, value, states, dense_limit, base):
    local = np.full(chain.size, -1, dtype=np.int64)
    local[states] = np.arange(states.size)
    b = K.level_rhs(states, chain.fitness, V, chain.weights, value) - 1.0 + base[states]
    if states.size <= dense_limit:
        A, _ = K.level_system(states, local, chain.fitness, V, chain.weights, value)
        return scipy.linalg.solve(A, b)
    op = scipy.sparse.linalg.LinearOperator(
        (states.size, states.size),
        matvec=lambda v: K.level_matvec(states, local, chain.fitness, chain.weights, value, np.ascontiguousarray(v).ravel()),
        dtype=float,
    )
    x, info = scipy.sparse.linalg.gmres(op, b, rtol=1e-14, atol=0.0, restart=200, maxiter=10_000)
    if info != 0:
        raise NumericalError(f"gmres did not converge on a level of {states.size} states (info={info})")
    return x


def _solve(chain, base, dense_limit):
    V = np.zeros(chain.size)
    for value, states in chain.levels():
        if value == chain.fitness[chain.optimum]:
            continue
        V[states] = _solve_level(chain, V, value, states, dense_limit, base)
    return V


def expected_hitting_times(chain: ChainModel, horizon=None, dense_limit=DENSE_LEVEL_LIMIT, refinements=3) -> ExactResult:
    """E[tau | x] for all states, plus P(tau <= t) up to ``horizon`` if given.

    Moves never lower fitness, so the system is block triangular in the
    fitness levels; each level is solved once the levels above it are known.
    Levels larger than ``dense_limit`` use GMRES on an implicit operator.
    A few rounds of iterative refinement on the drift residual follow.
    """
    transient = _transient(chain)
    V = _solve(chain, np.ones(chain.size), dense_limit)
    extended = chain.n <= EXTENDED_MAX_N
    if extended:
        # large hitting times cancel in the drift sums, so float64 cannot
        # certify 1e-9; residuals and accumulated corrections use long double
        V = V.astype(np.longdouble)
    for _ in range(refinements):
        r = np.where(transient, 1 - one_step_drift(chain, V), 0)
        if np.max(np.abs(r)) < 1e-15:
            break
        V += _solve(chain, r.astype(float), dense_limit)
    residual = float(np.max(np.abs(one_step_drift(chain, V)[transient] - 1), initial=0.0))
    if residual > RESIDUAL_TOL:
        raise NumericalError(f"hitting-time residual {residual:.3e} exceeds {RESIDUAL_TOL}")
    cdf = hitting_time_cdf(chain, np.arange(horizon + 1)) if horizon is not None else None
    V64 = V.astype(float)
    return ExactResult(V64, float(V.mean()), residual, cdf, V if extended else None)


def _transient(chain):
    mask = np.ones(chain.size, dtype=bool)
    mask[chain.optimum] = False
    return mask


def one_step_drift(chain: ChainModel, V):
    """Expected one-step decrease of ``V`` from every state.

    Long double input is evaluated in long double (vectorized numpy);
    anything else goes through the compiled float64 kernel.
    """
    if V.dtype != np.longdouble:
        return K.one_step_drift(chain.fitness, np.asarray(V, dtype=float), chain.weights)
    n, size = chain.n, chain.size
    p = np.longdouble(1) / n
    d = np.arange(n + 1)
    by_distance = p**d * (1 - p) ** (n - d)
    masks = np.arange(size)
    wm = by_distance[np.array([K.popcount64(np.uint64(m)) for m in masks])]
    out = np.zeros(size, dtype=np.longdouble)
    block = max(1, (1 << 22) // size)
    f = chain.fitness
    for lo in range(0, size, block):
        xs = np.arange(lo, min(size, lo + block))
        ys = xs[:, None] ^ masks[None, :]
        take = f[ys] >= f[xs][:, None]
        out[xs] = np.sum(np.where(take, wm[None, :] * (V[xs][:, None] - V[ys]), 0), axis=1)
    return out


def _uniform_start(chain):
    return np.full(chain.size, 1.0 / chain.size)


def hitting_time_cdf(chain: ChainModel, times, start=None):
    """P(tau <= t) at each of ``times`` (tau counts steps, so tau = 0 at the optimum).

    A contiguous range from 0 is iterated step by step; scattered large times
    are reached by repeated squaring of the dense transition matrix.
    """
    times = np.asarray(times, dtype=np.int64)
    if times.size == 0:
        return np.empty(0)
    if times.min() < 0:
        raise ValueError("times must be nonnegative")
    pi0 = _uniform_start(chain) if start is None else np.asarray(start, dtype=float)
    horizon = int(times.max())
    if horizon < 4 * times.size or chain.size > DENSE_MATRIX_LIMIT:
        curve = distribution_curve(chain, horizon, pi0)
        return curve[times]
    return _cdf_by_squaring(chain, times, pi0)


def distribution_curve(chain: ChainModel, horizon, start=None):
    """P(tau <= t) for t = 0..horizon by iterating the state distribution."""
    pi0 = _uniform_start(chain) if start is None else np.asarray(start, dtype=float)
    if chain.size <= 1024:
        P = chain.matrix()
        out = np.empty(horizon + 1)
        pi = pi0.copy()
        out[0] = pi[chain.optimum]
        for t in range(1, horizon + 1):
            pi = pi @ P
            if t % 64 == 0:
                pi[pi < TINY] = 0.0
            out[t] = pi[chain.optimum]
        return out
    ids = np.empty(chain.size, dtype=np.int64)
    levels = chain.levels()[::-1]  # increasing fitness
    for k, (_, states) in enumerate(levels):
        ids[states] = k
    return K.iterate_distribution(pi0, chain.fitness, chain.weights, ids, len(levels), horizon, chain.optimum)


def _cdf_by_squaring(chain, times, pi0):
    order = np.argsort(times, kind="stable")
    powers = [chain.matrix()]
    out = np.empty(times.size)
    pi = pi0.copy()
    now = 0
    for idx in order:
        gap = int(times[idx]) - now
        bit = 0
        while gap:
            if bit == len(powers):
                sq = powers[-1] @ powers[-1]
                sq[sq < TINY] = 0.0
                powers.append(sq)
            if gap & 1:
                pi = pi @ powers[bit]
                pi[pi < TINY] = 0.0
            gap >>= 1
            bit += 1
        now = int(times[idx])
        out[idx] = pi[chain.optimum]
    return out


def expected_truncated(chain: ChainModel, T, start=None):
    """E[min(tau, T)] = sum over t < T of P(tau > t)."""
    if T <= 0:
        return 0.0
    curve = distribution_curve(chain, T - 1, start)
    return float(np.sum(1.0 - curve))


@dataclass
class DriftIdentityReport:
    max_deviation: float
    absorbing_drift: float
    tolerance: float
    passed: bool


def verify_drift_identity(chain: ChainModel, result: ExactResult, tolerance=RESIDUAL_TOL) -> DriftIdentityReport:
    """Check that V = E[tau | .] has one-step mean drift exactly 1 off the optimum."""
    V = result.extended if result.extended is not None else result.expected
    drift = one_step_drift(chain, V)
    transient = _transient(chain)
    dev = float(np.max(np.abs(drift[transient] - 1.0))) if transient.any() else 0.0
    at_opt = float(drift[chain.optimum])
    return DriftIdentityReport(dev, at_opt, tolerance, dev < tolerance and abs(at_opt) < tolerance)


@dataclass
class DriftBoundReport:
    applicable: bool
    min_drift: float
    c_l: float
    max_excess: float  # max over x of E[tau|x] - V(x)/c_l; <= tolerance when the bound holds
    max_gap: float  # max over x of |E[tau|x] - V(x)/c_l|
    holds: Optional[bool]


def verify_drift_bound(chain: ChainModel, V, c_l, expected=None, tolerance=RESIDUAL_TOL) -> DriftBoundReport:
    """Check the drift theorem: min drift >= c_l > 0 implies E[tau|x] <= V(x)/c_l.

    ``expected`` holds E[tau | x] (solved here when omitted). Long double
    arrays keep their precision. When the minimum drift falls below ``c_l``
    (up to ``tolerance``) the theorem does not apply; that is reported with
    ``holds=None``.
    """
    V = np.asarray(V)
    if V.dtype != np.longdouble:
        V = V.astype(float)
    if V.shape != (chain.size,):
        raise ValueError(f"distance must have one value per state ({chain.size})")
    if c_l <= 0:
        raise ValueError("c_l must be positive")
    transient = _transient(chain)
    if V[chain.optimum] != 0 or np.any(V[transient] <= 0):
        raise ValueError("distance must vanish at the optimum and be positive elsewhere")
    if expected is None:
        res = expected_hitting_times(chain)
        expected = res.extended if res.extended is not None else res.expected
    drift = one_step_drift(chain, V)
    min_drift = float(drift[transient].min()) if transient.any() else float("inf")
    diff = expected - V / c_l
    excess, gap = float(diff.max()), float(np.abs(diff).max())
    if min_drift < c_l - tolerance:
        return DriftBoundReport(False, min_drift, c_l, excess, gap, None)
    scale = max(1.0, float(np.abs(expected).max()))
    return DriftBoundReport(True, min_drift, c_l, excess, gap, excess <= tolerance * scale)


def hamming_distance_to_optimum(chain: ChainModel):
    x = np.arange(chain.size, dtype=np.uint64) ^ np.uint64(chain.optimum)
    return np.array([K.popcount64(v) for v in x], dtype=float)


def state_rows(chain: ChainModel, result: ExactResult):
    """(state hex, fitness, expected_tau) rows in state order."""
    for x in range(chain.size):
        yield chain.state_label(x), int(chain.fitness[x]), float(result.expected[x])
