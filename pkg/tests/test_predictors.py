import math
from fractions import Fraction

import numpy as np
import pytest

from depthlab.errors import ConfigError
from depthlab.predictors import (
    HALF,
    PredictorFamily,
    PredictorSpec,
    betting_game_trace,
    correct_probabilities,
    martingale_log,
    predict,
    predictor_accuracy,
    predictor_perf,
)
from depthlab.sequences import nth_string

UNIFORM = PredictorSpec("uniform")
FREQUENCY = PredictorSpec("frequency")


def random_predictor(rng):
    kind = ["uniform", "frequency", "markov"][int(rng.integers(0, 3))]
    return PredictorSpec(kind, int(rng.integers(0, 4)) if kind == "markov" else 0)


def random_bits(rng, n):
    return "".join(rng.choice(["0", "1"], size=n)) if n else ""


def test_predict_examples():
    assert predict(FREQUENCY, nth_string(3), "000") == (Fraction(4, 5), Fraction(1, 5))
    assert predict(FREQUENCY, nth_string(0), "") == (HALF, HALF)
    markov = PredictorSpec("markov", 1)
    # after a 0 the history shows one 1 and no 0
    assert predict(markov, nth_string(3), "010") == (Fraction(1, 3), Fraction(2, 3))
    assert predict(markov, nth_string(0), "") == (HALF, HALF)


def test_oracle_knows_its_target():
    oracle = PredictorSpec("oracle", target="0110")
    assert predict(oracle, nth_string(1), "0") == (Fraction(0), Fraction(1))
    assert predict(oracle, nth_string(9), "") == (HALF, HALF)
    assert martingale_log(oracle, "0110") == 4.0
    assert predictor_perf(oracle, "0110").value == 1.0
    assert martingale_log(oracle, "0111") == -math.inf
    assert predictor_perf(oracle, "0111").value == 0.0


def test_frequency_on_zeros():
    assert correct_probabilities(FREQUENCY, "0000") == [
        Fraction(1, 2),
        Fraction(2, 3),
        Fraction(3, 4),
        Fraction(4, 5),
    ]
    assert martingale_log(FREQUENCY, "0000") == pytest.approx(math.log2(3.2), rel=1e-12)
    assert predictor_perf(FREQUENCY, "0000").value == pytest.approx(math.log2(3.2) / 4, rel=1e-12)
    assert predictor_accuracy(FREQUENCY, "0000").value == 0.875


def test_uniform_is_fair():
    rng = np.random.default_rng(1)
    for n in (1, 7, 64):
        w = random_bits(rng, n)
        assert martingale_log(UNIFORM, w) == 0.0
        assert predictor_perf(UNIFORM, w).value == 0.0
        assert predictor_accuracy(UNIFORM, w).value == 0.5


def test_uniform_ignores_history():
    rng = np.random.default_rng(2)
    for i in range(200):
        history = random_bits(rng, int(rng.integers(0, 40)))
        assert predict(UNIFORM, nth_string(i), history) == (HALF, HALF)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(3)
    for i in range(500):
        pred = random_predictor(rng)
        p0, p1 = predict(pred, nth_string(i), random_bits(rng, int(rng.integers(0, 30))))
        assert p0 + p1 == 1
        assert 0 < p0 < 1


def test_incremental_counts_match_predict():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pred = random_predictor(rng)
        w = random_bits(rng, int(rng.integers(1, 40)))
        expected = [predict(pred, nth_string(i), w[:i])[int(b)] for i, b in enumerate(w)]
        assert correct_probabilities(pred, w) == expected


def test_martingale_is_fair():
    rng = np.random.default_rng(5)
    for _ in range(2000):
        pred = random_predictor(rng)
        w = random_bits(rng, int(rng.integers(0, 16)))
        both = np.logaddexp2(martingale_log(pred, w + "0"), martingale_log(pred, w + "1"))
        assert both == pytest.approx(martingale_log(pred, w) + 1.0, rel=1e-9, abs=1e-9)


def test_game_matches_product():
    rng = np.random.default_rng(6)
    for _ in range(10_000):
        pred = random_predictor(rng)
        w = random_bits(rng, int(rng.integers(1, 33)))
        trace = betting_game_trace(pred, w)
        assert len(trace) == len(w) + 1
        assert trace[-1] == pytest.approx(martingale_log(pred, w), rel=1e-9, abs=1e-9)


def test_game_prefixes_match_product():
    rng = np.random.default_rng(7)
    pred = PredictorSpec("markov", 2)
    w = random_bits(rng, 48)
    trace = betting_game_trace(pred, w)
    assert trace[0] == 0.0
    for n in range(1, len(w) + 1):
        assert trace[n] == pytest.approx(martingale_log(pred, w[:n]), rel=1e-9, abs=1e-9)


def test_game_traces():
    assert betting_game_trace(UNIFORM, "0110").log2_values == (0.0,) * 5
    oracle = PredictorSpec("oracle", target="1011")
    assert betting_game_trace(oracle, "1011").log2_values == (0.0, 1.0, 2.0, 3.0, 4.0)
    assert betting_game_trace(oracle, "1111")[-1] == -math.inf
    assert betting_game_trace(FREQUENCY, "0000")[-1] == pytest.approx(math.log2(3.2), rel=1e-9)


def test_perf_in_unit_interval():
    rng = np.random.default_rng(8)
    for _ in range(300):
        pred = random_predictor(rng)
        w = random_bits(rng, int(rng.integers(1, 64)))
        assert 0.0 <= predictor_perf(pred, w).value < 1.0
        assert 0.0 <= predictor_accuracy(pred, w).value <= 1.0


def test_empty_prefix():
    with pytest.raises(ValueError):
        predictor_perf(UNIFORM, "")
    with pytest.raises(ValueError):
        predictor_accuracy(UNIFORM, "")
    assert martingale_log(FREQUENCY, "") == 0.0
    assert betting_game_trace(FREQUENCY, "").log2_values == (0.0,)


def test_family_on_alternating_bits():
    family = PredictorFamily(2)
    w = "01" * 256
    observers = family.best_observers(w)
    assert observers[0][0].value == 0.0
    assert str(observers[0][1]) == "predictor@0[kind=uniform]"
    assert observers[1][0].value > 0.9
    assert str(observers[1][1]) == "predictor@1[kind=markov,order=1]"
    assert observers[2][0] >= observers[1][0]
    assert family.raw_logs(w)[0] == 0.0
    assert family.raw_logs(w)[1] > 0.9 * len(w)


def test_family_is_monotone():
    rng = np.random.default_rng(9)
    family = PredictorFamily(3)
    for _ in range(20):
        w = "".join(rng.choice(["0", "1", "011", "0001"], size=40))
        perfs = family.perfs(w)
        assert [perfs[r] for r in family.levels] == sorted(perfs.values())


def test_accuracy_family():
    family = PredictorFamily(1, "accuracy")
    assert family.perf("01" * 256, 1).value > 0.99
    assert family.perf("", 1).value == 0.0


def test_family_errors():
    with pytest.raises(ConfigError):
        PredictorFamily(-1)
    with pytest.raises(ConfigError):
        PredictorFamily(1, "loss")
    with pytest.raises(ConfigError):
        PredictorFamily(1).perf("01", 2)


@pytest.mark.parametrize("text", ["predictor:uniform", "predictor:frequency", "predictor:markov:3"])
def test_predictor_spec_parse(text):
    assert str(PredictorSpec.parse(text)) == text


def test_predictor_spec_parse_without_prefix():
    assert PredictorSpec.parse("markov:2") == PredictorSpec("markov", 2)


@pytest.mark.parametrize(
    "text",
    [
        "predictor:oracle",
        "predictor:markov:x",
        "predictor:markov:-1",
        "predictor:gauss",
        "predictor:markov:1:2",
        "predictor:uniform:3",
        "frequency:0",
    ],
)
def test_predictor_spec_parse_errors(text):
    with pytest.raises(ConfigError):
        PredictorSpec.parse(text)
