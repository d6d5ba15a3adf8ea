"""TrapZeros and OneMax fitness functions and schema classification."""

import enum
import math
from dataclasses import dataclass

from . import _kernels as K
from .errors import ConfigurationError
from .genome import Genome

PROBLEM_IDS = ("trapzeros", "onemax")


class SchemaClass(enum.Enum):
    SSTAR = "SStar"
    S1_NON_STAR = "S1NonStar"
    S0 = "S0"
    PREFIX10 = "Prefix10"
    PREFIX01 = "Prefix01"


def block_length(n):
    """Length of the all-ones prefix that defines S*: floor(ln(n)^2) + 2.

    >>> block_length(10), block_length(100), block_length(3)
    (7, 23, 3)
    """
    if n < 3:
        raise ConfigurationError(f"n must be >= 3 for TrapZeros, got {n}")
    return math.floor(math.log(n) ** 2) + 2


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    n: int
    block_len: int = 0

    def __post_init__(self):
        if self.kind not in PROBLEM_IDS:
            raise ConfigurationError(f"unknown problem '{self.kind}', expected one of {PROBLEM_IDS}")
        if self.kind == "trapzeros":
            if self.block_len == 0:
                object.__setattr__(self, "block_len", block_length(self.n))
            if not 2 <= self.block_len <= self.n:
                raise ConfigurationError(f"block length {self.block_len} outside [2, {self.n}]")
        elif self.n < 1:
            raise ConfigurationError(f"n must be >= 1 for OneMax, got {self.n}")

    @classmethod
    def trapzeros(cls, n):
        return cls("trapzeros", n)

    @classmethod
    def onemax(cls, n):
        return cls("onemax", n)

    @property
    def code(self):
        return K.TRAPZEROS if self.kind == "trapzeros" else K.ONEMAX

    @property
    def min_n(self):
        return 3 if self.kind == "trapzeros" else 1

    @property
    def optimum_value(self):
        return 4 * self.n if self.kind == "trapzeros" else self.n

    def fitness(self, g):
        if self.kind == "trapzeros":
            return trapzeros_fitness(g, self)
        return onemax_fitness(g)


def _check_length(g, spec):
    if g.n != spec.n:
        raise ValueError(f"genome length {g.n} does not match problem size {spec.n}")


def trapzeros_fitness(g: Genome, spec: ProblemSpec) -> int:
    _check_length(g, spec)
    return int(K.trapzeros_words(g.words, g.n, spec.block_len))


def onemax_fitness(g: Genome) -> int:
    return int(K.ones_count(g.words))


def classify_schema(g: Genome, spec: ProblemSpec) -> SchemaClass:
    _check_length(g, spec)
    head = int(g.words[0]) & 3
    if head == 3:
        if K.leading_run(g.words, g.n, 1) >= spec.block_len:
            return SchemaClass.SSTAR
        return SchemaClass.S1_NON_STAR
    if head == 0:
        return SchemaClass.S0
    # bit 0 is x1
    return SchemaClass.PREFIX10 if head == 1 else SchemaClass.PREFIX01


def fitness_range(cls: SchemaClass, spec: ProblemSpec):
    """Inclusive range of TrapZeros values attainable inside ``cls``."""
    n, L = spec.n, spec.block_len
    return {
        SchemaClass.PREFIX01: (0, 0),
        SchemaClass.PREFIX10: (1, 1),
        SchemaClass.S1_NON_STAR: (n + 2, n + L - 1),
        SchemaClass.S0: (2 * n + 2, 3 * n),
        SchemaClass.SSTAR: (3 * n + L, 4 * n),
    }[cls]


def schema_from_fitness(value, spec: ProblemSpec) -> SchemaClass:
    """Recover the schema of a TrapZeros genome from its fitness alone."""
    n, L = spec.n, spec.block_len
    if value >= 3 * n + L:
        return SchemaClass.SSTAR
    if value >= 2 * n + 2:
        return SchemaClass.S0
    if value >= n + 2:
        return SchemaClass.S1_NON_STAR
    if value == 1:
        return SchemaClass.PREFIX10
    if value == 0:
        return SchemaClass.PREFIX01
    raise ValueError(f"{value} is not a TrapZeros value for n={n}")
