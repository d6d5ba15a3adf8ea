"""The (N+N) EA: initialization, bitwise mutation, truncation selection, trials."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .decomposition import EventTimeline, takeover_threshold
from .errors import ConfigurationError
from .genome import Genome
from .problems import ProblemSpec


class RngStream:
    """Counter-based random stream keyed by (master seed, context, stream index).

    Each stream is a Philox generator seeded through ``SeedSequence`` with the
    trial context as spawn key, so a trial's draws never depend on which other
    trials ran or in what order.
    """

    def __init__(self, master_seed, stream_index=0, context=()):
        if not 0 <= master_seed < 2**64:
            raise ConfigurationError("master seed must be a 64-bit unsigned integer")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self.context = tuple(int(c) for c in context)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.context + (self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    @classmethod
    def for_trial(cls, master_seed, stream_index, problem, N):
        return cls(master_seed, stream_index, (problem.code, problem.n, N))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index}, context={self.context})"


@dataclass
class PopulationState:
    words: np.ndarray  # (N, W) uint64
    fitness: np.ndarray  # (N,) int64
    n: int
    generation: int = 1
    evaluations: int = 0

    @property
    def size(self):
        return self.fitness.shape[0]

    @property
    def members(self):
        return [Genome(self.words[i].copy(), self.n) for i in range(self.size)]

    def copy(self):
        return PopulationState(self.words.copy(), self.fitness.copy(), self.n, self.generation, self.evaluations)

    @classmethod
    def from_genomes(cls, genomes, problem, generation=1):
        words = np.stack([g.words for g in genomes]).astype(np.uint64)
        fitness = np.array([problem.fitness(g) for g in genomes], dtype=np.int64)
        return cls(words, fitness, problem.n, generation, len(genomes))


def _resolve(rng):
    return rng.generator if isinstance(rng, RngStream) else rng


def initialize_population(n, N, rng, problem=None):
    """N uniformly random genomes with cached fitness, as generation 1."""
    if problem is None:
        if n < 3:
            raise ConfigurationError(f"n must be >= 3, got {n}")
        problem = ProblemSpec.trapzeros(n)
    if n < problem.min_n or problem.n != n:
        raise ConfigurationError(f"invalid problem size n={n} for {problem.kind}")
    if N < 1:
        raise ConfigurationError(f"population size must be >= 1, got {N}")
    words = np.zeros((N, K.n_words(n)), dtype=np.uint64)
    fitness = np.zeros(N, dtype=np.int64)
    K.init_population(_resolve(rng), words, fitness, n, problem.code, problem.block_len)
    return PopulationState(words, fitness, n, generation=1, evaluations=N)


def mutate(g: Genome, rng) -> Genome:
    """Bitwise mutation: a new genome with each bit flipped w.p. 1/n."""
    child = np.empty_like(g.words)
    K.mutate_into(_resolve(rng), g.words, child, g.n)
    return Genome(child, g.n)


def truncation_select(parents: PopulationState, offspring, problem) -> PopulationState:
    """Keep the N fittest of parents and offspring.

    Ties prefer offspring over parents, then the lower index.
    """
    N = parents.size
    if len(offspring) != N:
        raise RuntimeError(f"expected {N} offspring, got {len(offspring)}")
    off_w = np.stack([g.words for g in offspring]).astype(np.uint64)
    off_f = np.array([problem.fitness(g) for g in offspring], dtype=np.int64)
    out = parents.copy()
    cand_w = np.empty((2 * N, out.words.shape[1]), dtype=np.uint64)
    cand_f = np.empty(2 * N, dtype=np.int64)
    K.select_into(out.words, out.fitness, off_w, off_f, cand_w, cand_f)
    out.generation += 1
    return out


def step(state: PopulationState, problem, rng) -> PopulationState:
    """One generation: N mutations, N evaluations, truncation selection."""
    out = state.copy()
    N, W = out.words.shape
    K.step_inplace(
        _resolve(rng),
        out.words,
        out.fitness,
        np.empty((N, W), dtype=np.uint64),
        np.empty(N, dtype=np.int64),
        np.empty((2 * N, W), dtype=np.uint64),
        np.empty(2 * N, dtype=np.int64),
        out.n,
        problem.code,
        problem.block_len,
    )
    out.generation += 1
    out.evaluations += N
    return out


@dataclass
class TrialRecord:
    stream_index: int
    hit: bool
    tau: Optional[int]
    generations: int
    evaluations: int
    first_s0_gen: Optional[int] = None
    first_sstar_gen: Optional[int] = None
    b_full_takeover_gen: Optional[int] = None
    early_aborted: bool = False
    seed: int = 0
    timeline: Optional[EventTimeline] = field(default=None, repr=False, compare=False)
    final_state: Optional[PopulationState] = field(default=None, repr=False, compare=False)


def _opt(v):
    v = int(v)
    return None if v < 0 else v


def run_trial(config, stream_index) -> TrialRecord:
    """Run one trial of ``config`` on stream ``stream_index``.

    Stops when the optimum is in the population or when another generation
    would exceed the evaluation budget (the initial population costs N).
    """
    problem = config.problem_spec
    N = config.N
    if config.eval_budget <= 0:
        raise ConfigurationError("evaluation budget must be positive")
    rng = RngStream.for_trial(config.seed, stream_index, problem, N)
    threshold = takeover_threshold(config.epsilon, N)
    hit, t, aborted, ev, seg, words, fitness = K.run_trial_kernel(
        rng.generator, problem.n, N, problem.code, problem.block_len,
        config.eval_budget, threshold, bool(config.early_abort),
    )
    timeline = None
    if problem.kind == "trapzeros":
        timeline = EventTimeline.from_arrays(config.epsilon, N, seg, ev, t)
    return TrialRecord(
        stream_index=stream_index,
        hit=bool(hit),
        tau=int(t) if hit else None,
        generations=int(t),
        evaluations=int(t) * N,
        first_s0_gen=_opt(ev[0]),
        first_sstar_gen=_opt(ev[1]),
        b_full_takeover_gen=_opt(ev[2]),
        early_aborted=bool(aborted),
        seed=config.seed,
        timeline=timeline,
        final_state=PopulationState(words, fitness, problem.n, int(t), int(t) * N),
    )
