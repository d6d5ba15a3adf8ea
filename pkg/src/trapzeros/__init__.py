"""Simulation and verification lab for the (N+N) EA on TrapZeros."""

from .core import (
    PopulationState,
    RngStream,
    TrialRecord,
    initialize_population,
    mutate,
    run_trial,
    step,
    truncation_select,
)
from .decomposition import (
    EventTimeline,
    LocalOptCounts,
    PopulationClass,
    classify_population,
    record_generation,
    takeover_statistics,
)
from .bounds import (
    Binomial,
    BoundCheck,
    chebyshev_check,
    chernoff_check,
    markov_check,
    takeover_growth_check,
    upgrade_prob_A,
)
from .config import parse_config, write_config
from .errors import ConfigurationError, NumericalError, ResourceError
from .exact import (
    ChainModel,
    ExactResult,
    build_chain,
    expected_hitting_times,
    hitting_time_cdf,
    verify_drift_bound,
    verify_drift_identity,
)
from .genome import Genome
from .problems import ProblemSpec, SchemaClass, block_length, classify_schema, onemax_fitness, trapzeros_fitness
from .trials import ExperimentConfig, estimate_solvable_rate, hitting_time_ecdf, run_batch, sweep

__version__ = "0.1.0"
