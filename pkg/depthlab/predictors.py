"""
Predictors betting on characteristic sequences, scored by the capital of their martingale

A predictor p assigns p(x, 0) + p(x, 1) = 1 to the membership of each string x. Playing the fair game
on w = χ_L[0..n-1], it stakes p(sᵢ, b) of its capital on bit b in round i and the correct side is
doubled, so the capital after n rounds is 2ⁿ ∏ p(sᵢ, w[i]). Capital spans 2^±n, so everything here is
kept as log₂ capital.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Literal, Sequence, Tuple, get_args

import numpy as np

from depthlab.core import ObserverFamily, ObserverId, PerformanceValue
from depthlab.errors import ConfigError
from depthlab.sequences import nth_string, string_index

PREDICTOR_KINDS = Literal["uniform", "frequency", "markov", "oracle"]
VALID_PREDICTOR_KINDS: Tuple[PREDICTOR_KINDS, ...] = get_args(PREDICTOR_KINDS)

PERF_MODES = Literal["capital", "accuracy"]
VALID_PERF_MODES: Tuple[PERF_MODES, ...] = get_args(PERF_MODES)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PredictorSpec:
    """
    Args:
        kind (str): uniform, frequency (order-0 add-one counts), markov (order-r add-one counts) or oracle
        order (int): Context length r of the markov kind
        target (str): The characteristic prefix an oracle knows; test use only
    """

    kind: PREDICTOR_KINDS
    order: int = 0
    target: str = field(default="", repr=False)

    def __post_init__(self):
        if self.kind not in VALID_PREDICTOR_KINDS:
            raise ConfigError(
                f"The predictor must be one of {', '.join(VALID_PREDICTOR_KINDS)}, got {self.kind!r}"
            )
        if self.order < 0:
            raise ConfigError(f"The markov order must be nonnegative, got {self.order}")

    @classmethod
    def parse(cls, text: str) -> PredictorSpec:
        """Reads `predictor:<kind>[:order]`, the leading `predictor:` being optional."""
        parts = text.strip().split(":")
        if parts[0] == "predictor":
            parts = parts[1:]
        if not parts or len(parts) > 2 or parts[0] == "oracle":
            raise ConfigError(f"Cannot read the predictor {text!r}")
        if len(parts) == 2 and parts[0] != "markov":
            raise ConfigError(f"Only the markov predictor takes an order, got {text!r}")
        try:
            return cls(parts[0], int(parts[1]) if len(parts) == 2 else 0)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Cannot read the markov order in {text!r}") from e

    @property
    def context_length(self) -> int:
        return 0 if self.kind == "frequency" else self.order

    def __str__(self):
        if self.kind == "markov":
            return f"predictor:markov:{self.order}"
        return f"predictor:{self.kind}"


def _smoothed(zeros: int, ones: int) -> Tuple[Fraction, Fraction]:
    p0 = Fraction(zeros + 1, zeros + ones + 2)
    return p0, 1 - p0


def predict(pred: PredictorSpec, query: str, history: str) -> Tuple[Fraction, Fraction]:
    """
    (p(query, 0), p(query, 1)) given the revealed bits of the characteristic prefix

    The uniform kind ignores history; the counting kinds condition on it; the oracle reads its target at
    the query's index. Probabilities are exact fractions so p0 + p1 == 1 holds exactly.
    """
    if pred.kind == "uniform":
        return HALF, HALF
    if pred.kind == "oracle":
        i = string_index(query)
        if not 0 <= i < len(pred.target):
            return HALF, HALF
        return (Fraction(1), Fraction(0)) if pred.target[i] == "0" else (Fraction(0), Fraction(1))
    r = pred.context_length
    if len(history) < r:
        return HALF, HALF
    context = history[len(history) - r :]
    zeros = ones = 0
    for i in range(r, len(history)):
        if history[i - r : i] == context:
            if history[i] == "0":
                zeros += 1
            else:
                ones += 1
    return _smoothed(zeros, ones)


def correct_probabilities(pred: PredictorSpec, w: str) -> List[Fraction]:
    """p(sᵢ, w[i]) for every round i, with counts kept incrementally."""
    if pred.kind == "uniform":
        return [HALF] * len(w)
    if pred.kind == "oracle":
        return [predict(pred, nth_string(i), w[:i])[int(b)] for i, b in enumerate(w)]
    r = pred.context_length
    counts: Dict[str, List[int]] = {}
    probs = []
    for i, b in enumerate(w):
        if i < r:
            probs.append(HALF)
        else:
            zeros, ones = counts.get(w[i - r : i], (0, 0))
            probs.append(_smoothed(zeros, ones)[int(b)])
        # the bit at i becomes history for later rounds whose context matches w[i-r..i-1]
        if i >= r:
            tally = counts.setdefault(w[i - r : i], [0, 0])
            tally[int(b)] += 1
    return probs


def martingale_log(pred: PredictorSpec, w: str) -> float:
    """log₂ d_p(w) = |w| + Σ log₂ p(sᵢ, w[i]); -inf when some factor is 0."""
    probs = np.array([float(p) for p in correct_probabilities(pred, w)], dtype=np.float64)
    with np.errstate(divide="ignore"):
        return float(len(w) + np.log2(probs).sum())


@dataclass(frozen=True)
class CapitalTrace:
    log2_values: Tuple[float, ...]

    def __getitem__(self, n):
        return self.log2_values[n]

    def __len__(self):
        return len(self.log2_values)


def betting_game_trace(pred: PredictorSpec, w: str) -> CapitalTrace:
    """
    Plays the game round by round

    In round i the gambler stakes p(sᵢ, 1) of its capital on membership and the rest on
    non-membership; the stake on the revealed bit is doubled and the other stake lost.
    """
    log_capital = 0.0
    trace = [log_capital]
    for i, b in enumerate(w):
        p0, p1 = predict(pred, nth_string(i), w[:i])
        stake = p1 if b == "1" else p0
        if stake == 0 or log_capital == -math.inf:
            log_capital = -math.inf
        else:
            log_capital = log_capital + math.log2(stake) + 1.0
        trace.append(log_capital)
    return CapitalTrace(tuple(trace))


def predictor_perf(pred: PredictorSpec, w: str) -> PerformanceValue:
    """log₂ capital per round, clamped into [0, 1]."""
    if not w:
        raise ValueError("Predictor performance needs a nonempty prefix")
    log_capital = martingale_log(pred, w)
    if log_capital == -math.inf:
        return PerformanceValue(0.0)
    return PerformanceValue.clamped(log_capital / len(w))


def predictor_accuracy(pred: PredictorSpec, w: str) -> PerformanceValue:
    """Fraction of rounds whose more likely bit was the revealed one; an even split earns half."""
    if not w:
        raise ValueError("Predictor accuracy needs a nonempty prefix")
    score = Fraction(0)
    for p in correct_probabilities(pred, w):
        if p > HALF:
            score += 1
        elif p == HALF:
            score += HALF
    return PerformanceValue.clamped(float(score / len(w)))


class PredictorFamily(ObserverFamily):
    """
    Counting predictors indexed by context length

    Level r holds the uniform predictor and the markov predictors of order 0..r, so levels are nested
    and the best performance never drops as r grows.
    """

    name = "predictor"

    def __init__(self, max_order: int, perf_mode: PERF_MODES = "capital"):
        if max_order < 0:
            raise ConfigError(f"The largest markov order must be nonnegative, got {max_order}")
        if perf_mode not in VALID_PERF_MODES:
            raise ConfigError(
                f"The performance mode must be one of {', '.join(VALID_PERF_MODES)}, got {perf_mode!r}"
            )
        self.max_order = max_order
        self.perf_mode = perf_mode

    @property
    def levels(self) -> Sequence[int]:
        return range(0, self.max_order + 1)

    def score(self, pred: PredictorSpec, w: str) -> PerformanceValue:
        if not w:
            return PerformanceValue(0.0)
        if self.perf_mode == "accuracy":
            return predictor_accuracy(pred, w)
        return predictor_perf(pred, w)

    def raw_logs(self, w: str) -> Dict[int, float]:
        """Best raw log₂ capital per level, the unnormalised scale of the predictor bound family."""
        best = martingale_log(PredictorSpec("uniform"), w)
        logs = {}
        for r in self.levels:
            best = max(best, martingale_log(PredictorSpec("markov", r), w))
            logs[r] = best
        return logs

    def best_observers(self, w: str) -> Dict[int, Tuple[PerformanceValue, ObserverId]]:
        best_perf = self.score(PredictorSpec("uniform"), w)
        best_id = ObserverId(self.name, 0, (("kind", "uniform"),))
        result = {}
        for r in self.levels:
            perf = self.score(PredictorSpec("markov", r), w)
            if perf > best_perf:
                best_perf = perf
                best_id = ObserverId(self.name, r, (("kind", "markov"), ("order", str(r))))
            result[r] = (best_perf, best_id)
        return result
