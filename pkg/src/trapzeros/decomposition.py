"""Population-set decomposition (E0 / A(rho) / B(rho)) and takeover timelines."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import _kernels as K

SIDES = {K.SIDE_E0: "E0", K.SIDE_A: "A", K.SIDE_B: "B"}
SIDE_CODES = {v: k for k, v in SIDES.items()}
EXIT_KINDS = {K.EXIT_OPEN: "open", K.EXIT_UP: "upgrade", K.EXIT_DOWN: "downgrade", K.EXIT_SWITCH: "switch"}
EXIT_CODES = {v: k for k, v in EXIT_KINDS.items()}


def takeover_threshold(epsilon, N):
    """ceil(epsilon * N), computed exactly from the float's binary value."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return math.ceil(Fraction(epsilon) * N)


@dataclass(frozen=True)
class PopulationClass:
    side: str  # "E0", "A" or "B"
    rho: Optional[int] = None

    def __str__(self):
        return "E0" if self.side == "E0" else f"{self.side}({self.rho})"


@dataclass(frozen=True)
class LocalOptCounts:
    """Multiplicities of the fittest S1 members (loia) and S0 members (loib).

    ``in_s0`` and ``in_sstar`` count all members of S0 and S* respectively.
    """

    loia: int
    loib: int
    in_s0: int = 0
    in_sstar: int = 0


def classify_population(pop, spec):
    side, rho, loia, loib, in_s0, in_sstar = K.classify(pop.words, pop.fitness, spec.n, spec.block_len)
    pclass = PopulationClass(SIDES[side], None if side == K.SIDE_E0 else int(rho))
    return pclass, LocalOptCounts(int(loia), int(loib), int(in_s0), int(in_sstar))


@dataclass
class Segment:
    side: str
    rho: int
    entry: int
    takeover: Optional[int] = None
    exit: Optional[int] = None
    exit_kind: str = "open"

    @property
    def eta(self):
        """Generations from entry to takeover (None when takeover never happened)."""
        return None if self.takeover is None else self.takeover - self.entry

    @property
    def phi(self):
        """Generations from takeover to the upgrade that ended the segment."""
        if self.exit_kind != "upgrade" or self.takeover is None:
            return None
        return self.exit - self.takeover


@dataclass
class EventTimeline:
    epsilon: float
    N: int
    segments: List[Segment] = field(default_factory=list)
    first_s0_gen: Optional[int] = None
    first_sstar_gen: Optional[int] = None
    b_full_takeover_gen: Optional[int] = None
    last_gen: int = 0

    @property
    def threshold(self):
        return takeover_threshold(self.epsilon, self.N)

    @property
    def open_segment(self):
        if self.segments and self.segments[-1].exit is None:
            return self.segments[-1]
        return None

    @classmethod
    def from_arrays(cls, epsilon, N, seg, ev, last_gen):
        tl = cls(epsilon, N)
        for row in seg:
            side, rho, entry, takeover, exit_, kind = (int(v) for v in row)
            tl.segments.append(Segment(
                SIDES[side], rho, entry,
                None if takeover < 0 else takeover,
                None if exit_ < 0 else exit_,
                EXIT_KINDS[kind],
            ))
        tl.first_s0_gen = None if ev[0] < 0 else int(ev[0])
        tl.first_sstar_gen = None if ev[1] < 0 else int(ev[1])
        tl.b_full_takeover_gen = None if ev[2] < 0 else int(ev[2])
        tl.last_gen = int(last_gen)
        return tl


def record_generation(timeline: EventTimeline, t: int, pclass: PopulationClass, counts: LocalOptCounts):
    """Fold generation ``t`` into ``timeline`` (in place) and return it.

    A segment is open while the class and rho stay fixed. Its takeover is the
    first generation whose matching count reaches ceil(eps*N), or the exit
    generation if rho rises on the same side first.
    """
    if t <= timeline.last_gen:
        raise RuntimeError(f"generation {t} recorded after {timeline.last_gen}")
    timeline.last_gen = t
    if timeline.first_s0_gen is None and counts.in_s0 > 0:
        timeline.first_s0_gen = t
    if timeline.first_sstar_gen is None and counts.in_sstar > 0:
        timeline.first_sstar_gen = t
    if timeline.b_full_takeover_gen is None and counts.in_s0 == timeline.N:
        timeline.b_full_takeover_gen = t

    cur = timeline.open_segment
    if cur is not None and (cur.side, cur.rho) != (pclass.side, pclass.rho):
        cur.exit = t
        if cur.side != pclass.side:
            cur.exit_kind = "switch"
        elif pclass.rho > cur.rho:
            cur.exit_kind = "upgrade"
            if cur.takeover is None:
                cur.takeover = t
        else:
            cur.exit_kind = "downgrade"
        cur = None
    if cur is None and pclass.side != "E0":
        cur = Segment(pclass.side, pclass.rho, t)
        timeline.segments.append(cur)
    if cur is not None and cur.takeover is None:
        count = counts.loia if cur.side == "A" else counts.loib
        if count >= timeline.threshold:
            cur.takeover = t
    return timeline


@dataclass
class TakeoverRow:
    side: str
    rho: int
    samples: int
    mean: float
    max: int
    q25: float
    q50: float
    q75: float
    q95: float


@dataclass
class TakeoverSummary:
    eta: List[TakeoverRow]
    phi: List[TakeoverRow]
    max_mean_eta: dict  # side -> max over rho of mean eta

    def eta_row(self, side, rho):
        return next((r for r in self.eta if r.side == side and r.rho == rho), None)

    def phi_row(self, side, rho):
        return next((r for r in self.phi if r.side == side and r.rho == rho), None)


def _rows(groups):
    rows = []
    for (side, rho), values in sorted(groups.items()):
        v = np.asarray(values, dtype=float)
        q = np.quantile(v, [0.25, 0.5, 0.75, 0.95])
        rows.append(TakeoverRow(side, rho, len(v), float(v.mean()), int(v.max()), *map(float, q)))
    return rows


def takeover_statistics(timelines) -> TakeoverSummary:
    """Empirical takeover (eta) and upgrade (phi) times per (side, rho)."""
    timelines = list(timelines)
    if not timelines:
        raise ValueError("no timelines to summarize")
    eta, phi = {}, {}
    for tl in timelines:
        for s in tl.segments:
            if s.eta is not None:
                eta.setdefault((s.side, s.rho), []).append(s.eta)
            if s.phi is not None:
                phi.setdefault((s.side, s.rho), []).append(s.phi)
    eta_rows = _rows(eta)
    max_mean = {}
    for r in eta_rows:
        max_mean[r.side] = max(max_mean.get(r.side, r.mean), r.mean)
    return TakeoverSummary(eta_rows, _rows(phi), max_mean)


def timeline_records(timeline, **context):
    """One JSON-ready dict per segment."""
    for s in timeline.segments:
        yield {
            **context,
            "side": s.side,
            "rho": s.rho,
            "entry": s.entry,
            "takeover": s.takeover,
            "exit": s.exit,
            "exit_kind": s.exit_kind,
            "eta": s.eta,
            "phi": s.phi,
        }
