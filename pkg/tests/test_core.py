import pytest
from hypothesis import given
from hypothesis import strategies as st

from depthlab.core import (
    VALID_BOUND_KINDS,
    BoundSpec,
    PerformanceValue,
    bound_value,
    depth_condition,
    make_gap_record,
)
from depthlab.errors import ConfigError

bounds = st.one_of(
    st.builds(BoundSpec, st.sampled_from(["constant", "log", "loglog"]), c=st.integers(0, 64)),
    st.builds(
        BoundSpec,
        st.just("linear"),
        alpha=st.floats(min_value=0.001, max_value=1.0, allow_nan=False),
    ),
)


@pytest.mark.parametrize(
    "spec, n, expected",
    [
        (BoundSpec("linear", alpha=0.1), 100, 10),
        (BoundSpec("log", c=0), 1024, 10),
        (BoundSpec("constant", c=5), 3, 3),
        (BoundSpec("loglog", c=0), 16, 2),
        (BoundSpec("loglog", c=0), 2, 1),
        (BoundSpec("log", c=3), 1000, 13),
        (BoundSpec("constant", c=0), 50, 1),
    ],
)
def test_bound_value(spec, n, expected):
    assert bound_value(spec, n) == expected


@given(spec=bounds, n=st.integers(1, 2**16))
def test_bound_value_in_range(spec, n):
    assert 1 <= bound_value(spec, n) <= n


def test_bound_value_rejects_zero_length():
    with pytest.raises(ValueError):
        bound_value(BoundSpec(), 0)


@pytest.mark.parametrize(
    "gap, n, spec, expected",
    [
        (0.3, 100, BoundSpec("linear", alpha=0.1), True),
        (0.05, 100, BoundSpec("linear", alpha=0.1), False),
        (0.0, 8, BoundSpec("constant", c=1), False),
    ],
)
def test_depth_condition(gap, n, spec, expected):
    assert depth_condition(gap, n, spec) is expected


@given(
    spec=bounds,
    n=st.integers(1, 4096),
    gap=st.floats(-1, 1),
    extra=st.floats(0, 1),
)
def test_depth_condition_monotone(spec, n, gap, extra):
    if depth_condition(gap, n, spec):
        assert depth_condition(min(1.0, gap + extra), n, spec)


def test_make_gap_record():
    spec = BoundSpec("linear", alpha=0.1)
    r = make_gap_record(100, PerformanceValue(0.2), PerformanceValue(0.5), spec)
    assert r.gap == pytest.approx(0.3)
    assert r.threshold == pytest.approx(0.1)
    assert r.cleared

    r = make_gap_record(100, PerformanceValue(0.5), PerformanceValue(0.5), spec)
    assert r.gap == 0.0
    assert not r.cleared

    r = make_gap_record(100, PerformanceValue(0.6), PerformanceValue(0.5), spec)
    assert r.gap == pytest.approx(-0.1)
    assert not r.cleared


def test_performance_value():
    with pytest.raises(ValueError):
        PerformanceValue(1.5)
    with pytest.raises(ValueError):
        PerformanceValue(-0.01)
    assert PerformanceValue.clamped(1.5).value == 1.0
    assert PerformanceValue.clamped(-3.0).value == 0.0
    assert PerformanceValue(0.25) < PerformanceValue(0.5)
    assert float(PerformanceValue(0.75)) == 0.75


@pytest.mark.parametrize("text", ["linear:0.25", "log:3", "loglog:2", "constant:7"])
def test_bound_spec_parse(text):
    spec = BoundSpec.parse(text)
    assert str(spec) == text
    assert spec.kind in VALID_BOUND_KINDS


@pytest.mark.parametrize("text", ["cubic:1", "linear:0", "linear:1.5", "log:-1", "log:x"])
def test_bound_spec_parse_errors(text):
    with pytest.raises(ConfigError):
        BoundSpec.parse(text)


def test_gap_on_the_threshold_clears():
    spec = BoundSpec("linear", alpha=0.1)
    r = make_gap_record(100, PerformanceValue(0.2), PerformanceValue(0.3), spec)
    assert r.threshold == 0.1
    assert r.cleared
    # every pair of integer costs exactly m(n) apart sits on the threshold
    for weak_cost in range(10, 101):
        weak = PerformanceValue(1 - weak_cost / 100)
        strong = PerformanceValue(1 - (weak_cost - 10) / 100)
        assert make_gap_record(100, weak, strong, spec).cleared
        below = PerformanceValue(1 - (weak_cost - 9) / 100)
        assert not make_gap_record(100, weak, below, spec).cleared


@given(
    spec=bounds,
    n=st.integers(1, 2**12),
    weak=st.floats(0.0, 1.0, allow_nan=False),
    strong=st.floats(0.0, 1.0, allow_nan=False),
)
def test_cleared_recomputes_from_written_fields(spec, n, weak, strong):
    r = make_gap_record(n, PerformanceValue(weak), PerformanceValue(strong), spec)
    written_gap = float(f"{r.gap:.9f}")
    assert depth_condition(written_gap, n, spec) is r.cleared
