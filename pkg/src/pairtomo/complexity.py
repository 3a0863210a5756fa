"""Complexity-of-measurement calculus.

The complexity of a measurement task is the base-2 logarithm of the number of
measurement events needed to hit a target accuracy.  Bits compose additively
for joint measurements and log-sum-exp style for successive (incompatible)
ones.  Event counts always round up so a budget never undershoots its error
target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError

# relative slack when converting bits back to an integer event count, so that
# complexity_from_events followed by events_from_complexity is the identity
_CEIL_SLACK = 1e-12


@dataclass(frozen=True)
class Complexity:
    """log2 of an event count."""

    bits: float

    def __post_init__(self):
        if not math.isfinite(self.bits):
            raise ValueError("complexity must be finite")


@dataclass(frozen=True)
class ErrorSpec:
    """Standard error target per measured probability, 0 < s <= 1/2."""

    s: float

    def __post_init__(self):
        if not 0 < self.s <= 0.5:
            raise ValueError(f"error target must be in (0, 1/2], got {self.s}")

    @property
    def penalty_bits(self) -> float:
        return -2.0 * math.log2(self.s)


@dataclass(frozen=True)
class SeriesPlan:
    """An event budget split over a fixed number of measurement series."""

    num_series: int
    events_per_series: int
    total_events: int

    def __post_init__(self):
        if self.num_series < 1 or self.events_per_series < 1:
            raise ValueError("series plan needs at least one event per series")
        if self.total_events != self.num_series * self.events_per_series:
            raise ValueError("total_events must equal num_series * events_per_series")

    @classmethod
    def from_complexity(cls, c: Complexity, num_series: int) -> "SeriesPlan":
        raw = events_from_complexity(c)
        per = max(1, math.ceil(raw / num_series))
        return cls(num_series, per, num_series * per)


def complexity_from_events(m: int) -> Complexity:
    if m < 1:
        raise ValueError("event count must be at least 1")
    return Complexity(math.log2(m))


def events_from_complexity(c: Complexity) -> int:
    return max(1, math.ceil(2.0 ** c.bits * (1.0 - _CEIL_SLACK)))


def compose_joint(c1: Complexity, c2: Complexity) -> Complexity:
    """Joint measurement of correlated parts: bits add."""
    return Complexity(c1.bits + c2.bits)


def compose_successive(cs) -> Complexity:
    """Successive measurement of incompatible observables: event counts add."""
    bits = [c.bits for c in cs]
    if not bits:
        raise ValueError("compose_successive needs at least one complexity")
    return Complexity(float(np.logaddexp2.reduce(bits)))


def bernoulli_complexity(p: float, err: ErrorSpec) -> Complexity:
    """C_p(p, s) = log2(p (1 - p)) - 2 log2 s for a single probability."""
    if not 0 < p < 1:
        raise DegeneracyError(
            "p in {0, 1} is a certain outcome and needs no measurement events"
        )
    return Complexity(math.log2(p * (1.0 - p)) + err.penalty_bits)


@dataclass(frozen=True)
class ComplexityBounds:
    """Infimum/supremum budget range; ``inverted`` marks inf > sup as printed."""

    inf: Complexity
    sup: Complexity

    @property
    def inverted(self) -> bool:
        return self.inf.bits > self.sup.bits


def distribution_complexity_bounds(n: int, err: ErrorSpec) -> ComplexityBounds:
    """Bounds for an N-outcome distribution, implemented verbatim.

    inf = -log2 N - 2 log2 s (uniform distribution), sup = -4 - 2 log2 s.
    The printed constants invert for N < 16; ``inverted`` flags that instead
    of silently correcting it.
    """
    if n < 2:
        raise ValueError("distribution needs at least 2 outcomes")
    inf = Complexity(-math.log2(n) + err.penalty_bits)
    sup = Complexity(-4.0 + err.penalty_bits)
    return ComplexityBounds(inf, sup)


def qubit_state_complexity(dp: float, d1: float, d2: float, err: ErrorSpec) -> Complexity:
    """C_2 = log2(3 - dp^2 - d1^2 - d2^2) - 2 log2 s for three observable series."""
    norm_sq = dp * dp + d1 * d1 + d2 * d2
    if norm_sq > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector norm {math.sqrt(norm_sq)} exceeds 1")
    return Complexity(math.log2(3.0 - norm_sq) + err.penalty_bits)


QUQUART_SERIES = 5
PRIOR_SERIES = 3


def ququart_complexity_bounds(err: ErrorSpec) -> ComplexityBounds:
    """log2(5/4) + log2(3/4) - 2 log2 s <= C_4 <= log2(5/4) - 2 log2 s."""
    inf = Complexity(math.log2(5 / 4) + math.log2(3 / 4) + err.penalty_bits)
    sup = Complexity(math.log2(5 / 4) + err.penalty_bits)
    return ComplexityBounds(inf, sup)


def ququart_series_plan(err: ErrorSpec) -> tuple[SeriesPlan, SeriesPlan]:
    """Budgets for the five-series qubit-pair measurement (min and max plans)."""
    bounds = ququart_complexity_bounds(err)
    return (
        SeriesPlan.from_complexity(bounds.inf, QUQUART_SERIES),
        SeriesPlan.from_complexity(bounds.sup, QUQUART_SERIES),
    )


def prior_knowledge_complexity(err: ErrorSpec) -> tuple[Complexity, SeriesPlan]:
    """C_4 = log2 3 - 2 - 2 log2 s when the optimal local bases are known."""
    c = Complexity(math.log2(3.0) - 2.0 + err.penalty_bits)
    return c, SeriesPlan.from_complexity(c, PRIOR_SERIES)


def minimal_detector_count(dim: int) -> int:
    """Minimal number of non-degenerate observables for full reconstruction."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    return dim + 1


_PARAMETER_COUNTS = {"eigenbasis_known": 3, "local_bases_known": 5, "general": 9}


def parameter_count(knowledge: str) -> int:
    """Independent values to determine for a qubit pair at a given prior knowledge."""
    try:
        return _PARAMETER_COUNTS[knowledge]
    except KeyError:
        raise ValueError(
            f"knowledge must be one of {sorted(_PARAMETER_COUNTS)}, got {knowledge!r}"
        ) from None
