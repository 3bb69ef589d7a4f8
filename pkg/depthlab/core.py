"""
The observer framework every other module plugs into: performance values, bound families, the depth
condition and the abstract observer family.

A sequence looks deep to a pair of observer families (G, G') when, for some bound m, every observer
in G is beaten by some observer in G' by at least m(n)/n on infinitely many prefixes. Only finite
prefixes are ever looked at here, so the predicates below decide single prefix lengths and the
analyzer aggregates them.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Literal, Sequence, Tuple, get_args

from depthlab.errors import ConfigError

BOUND_KINDS = Literal["constant", "log", "loglog", "linear"]
VALID_BOUND_KINDS: Tuple[BOUND_KINDS, ...] = get_args(BOUND_KINDS)

REPORT_DECIMALS = 9


@dataclass(frozen=True)
class Ceilings:
    """
    Limits that keep every operation at desk scale

    Args:
        max_states (int): Largest transducer state budget accepted from the command line
        max_output (int): Largest per-edge output length accepted from the command line
        enumeration_space (int): Largest raw table space enumerate_ilfsts will walk
        il_search (int): Largest overhang bound k²·ℓ_max check_il will search
        sequence_length (int): Longest prefix a generator will produce
    """

    max_states: int = 3
    max_output: int = 2
    enumeration_space: int = 2_000_000
    il_search: int = 4096
    sequence_length: int = 2**20


DEFAULT_CEILINGS = Ceilings()


@dataclass(frozen=True, order=True)
class PerformanceValue:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(
                f"A performance value must lie in [0, 1], got {self.value}. Clamp before constructing."
            )

    @classmethod
    def clamped(cls, value: float) -> PerformanceValue:
        if math.isnan(value):
            raise ValueError("A performance value cannot be NaN")
        return cls(min(1.0, max(0.0, float(value))))

    def __float__(self):
        return self.value


WORST = PerformanceValue(0.0)


@dataclass(frozen=True)
class BoundSpec:
    """
    A member m of the bound family M

    Args:
        kind (str): constant (c), log (⌈log₂ n⌉ + c), loglog (⌈log₂ log₂ n⌉ + c) or linear (⌈α·n⌉)
        c (int): Additive constant, nonnegative
        alpha (float): Slope of the linear kind, in (0, 1]
    """

    kind: BOUND_KINDS = "linear"
    c: int = 0
    alpha: float = 0.1

    def __post_init__(self):
        if self.kind not in VALID_BOUND_KINDS:
            raise ConfigError(
                f"The bound kind must be one of {', '.join(VALID_BOUND_KINDS)}, got {self.kind!r}"
            )
        if self.c < 0:
            raise ConfigError(f"The bound constant must be nonnegative, got {self.c}")
        if self.kind == "linear" and not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")

    @classmethod
    def parse(cls, text: str) -> BoundSpec:
        """Reads the `<kind>:<parameter>` grammar, e.g. `linear:0.1` or `loglog:2`."""
        kind, _, parameter = text.strip().partition(":")
        if kind not in VALID_BOUND_KINDS:
            raise ConfigError(
                f"The bound kind must be one of {', '.join(VALID_BOUND_KINDS)}, got {kind!r}"
            )
        try:
            if kind == "linear":
                return cls(kind, alpha=float(parameter) if parameter else 0.1)
            return cls(kind, c=int(parameter) if parameter else 0)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Cannot read the bound parameter in {text!r}") from e

    def __str__(self):
        if self.kind == "linear":
            return f"linear:{self.alpha!r}"
        return f"{self.kind}:{self.c}"


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


def _ceil_loglog2(n: int) -> int:
    # smallest j with n <= 2^(2^j)
    j = 0
    while n > 1 << (1 << j):
        j += 1
    return j


def bound_value(spec: BoundSpec, n: int) -> int:
    """Returns m(n) for the given bound, clamped into [1, n]."""
    if n < 1:
        raise ValueError(f"Prefix lengths start at 1, got {n}")
    if spec.kind == "constant":
        m = spec.c
    elif spec.kind == "log":
        m = _ceil_log2(n) + spec.c
    elif spec.kind == "loglog":
        m = _ceil_loglog2(n) + spec.c
    else:
        # alpha taken at its decimal value
        m = math.ceil(Fraction(repr(spec.alpha)) * n)
    return min(n, max(1, m))


def depth_condition(gap: float, n: int, spec: BoundSpec) -> bool:
    # at report precision, so `cleared` agrees with the written gap and threshold
    return round(gap, REPORT_DECIMALS) >= round(bound_value(spec, n) / n, REPORT_DECIMALS)


@dataclass(frozen=True)
class ObserverId:
    family: str
    level: int
    parameters: Tuple[Tuple[str, str], ...] = ()

    def __str__(self):
        params = ",".join(f"{k}={v}" for k, v in self.parameters)
        return f"{self.family}@{self.level}" + (f"[{params}]" if params else "")


@dataclass(frozen=True)
class GapRecord:
    n: int
    perf_weak: PerformanceValue
    perf_strong: PerformanceValue
    gap: float
    threshold: float
    cleared: bool


def make_gap_record(
    n: int, weak: PerformanceValue, strong: PerformanceValue, spec: BoundSpec
) -> GapRecord:
    gap = strong.value - weak.value
    return GapRecord(
        n=n,
        perf_weak=weak,
        perf_strong=strong,
        gap=gap,
        threshold=bound_value(spec, n) / n,
        cleared=depth_condition(gap, n, spec),
    )


class ObserverFamily(ABC):
    """
    A named family of observers indexed by a resource level

    Subclasses score a string for every level at once, since most families share work between levels
    (a bigger state budget contains every smaller one).
    """

    name = "observer"

    @property
    @abstractmethod
    def levels(self) -> Sequence[int]:
        ...

    @abstractmethod
    def best_observers(self, x: str) -> Dict[int, Tuple[PerformanceValue, ObserverId]]:
        """
        Scores the string x

        Returns:
            dict: for every level, the best performance reached at that level and the observer reaching it
        """

    def perfs(self, x: str) -> Dict[int, PerformanceValue]:
        return {level: perf for level, (perf, _) in self.best_observers(x).items()}

    def perf(self, x: str, level: int) -> PerformanceValue:
        self.level_validator(level)
        return self.perfs(x)[level]

    def level_validator(self, level: int):
        if level not in self.levels:
            raise ConfigError(
                f"Level {level} is not part of the {self.name} family (levels {list(self.levels)})"
            )
