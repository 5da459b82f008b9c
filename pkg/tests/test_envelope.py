from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inhomwalk.harness.envelope import (
    fit_exponential_envelope,
    fit_growth_envelope,
    fit_log_exponential_envelope,
    fit_log_linear_upper,
    fit_ratio_envelope,
)

positive = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


def test_ratio_envelope():
    env = fit_ratio_envelope([2.0, 1.0, 4.0])
    assert (env.lower, env.upper, env.spread, env.rows) == (1.0, 4.0, 4.0, 3)


def test_ratio_envelope_empty_and_nonpositive():
    assert math.isnan(fit_ratio_envelope([]).spread)
    assert fit_ratio_envelope([0.0, 1.0]).spread == math.inf


@settings(max_examples=50, deadline=None)
@given(st.lists(positive, min_size=1, max_size=20), st.randoms(use_true_random=False))
def test_ratio_envelope_order_independent(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert fit_ratio_envelope(values) == fit_ratio_envelope(shuffled)


def test_exponential_envelope_exact_decay():
    ws = [0.0, 1.0, 2.0, 3.0]
    values = [2.0 * math.exp(-0.5 * w) for w in ws]
    env = fit_exponential_envelope(values, ws)
    assert env.spread == pytest.approx(1.0, abs=1e-6)
    assert env.lower_rate == pytest.approx(0.5, abs=1e-6)
    assert env.upper_rate == pytest.approx(0.5, abs=1e-6)
    assert env.upper_const == pytest.approx(2.0, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(positive, st.floats(min_value=0.0, max_value=10.0)), min_size=1, max_size=12))
def test_exponential_envelope_contains_inputs(pairs):
    values = [p[0] for p in pairs]
    ws = [p[1] for p in pairs]
    env = fit_exponential_envelope(values, ws)
    assert env.spread >= 1.0 - 1e-9
    assert 0.0 <= env.upper_rate <= env.lower_rate + 1e-9
    for v, w in pairs:
        assert env.contains(v, w, rel_tol=1e-6)
    reversed_env = fit_exponential_envelope(values[::-1], ws[::-1])
    assert reversed_env.spread == pytest.approx(env.spread, rel=1e-9)


def test_exponential_envelope_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponential_envelope([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        fit_exponential_envelope([1.0], [0.0, 1.0])
    assert fit_exponential_envelope([], []).rows == 0


def test_log_exponential_envelope_below_double_range():
    ws = [0.0, 10.0, 20.0]
    logs = [-800.0 - 2.0 * w for w in ws]
    env = fit_log_exponential_envelope(logs, ws)
    assert env.admissible
    assert env.lower_const == 0.0
    assert env.spread == pytest.approx(1.0, abs=1e-6)
    assert env.lower_rate == pytest.approx(2.0, abs=1e-6)
    assert all(env.contains_log(v, w) for v, w in zip(logs, ws))
    assert not env.contains_log(logs[0] + 1.0, ws[0])


def test_exponential_envelope_rates_ordered_when_data_grows():
    ws = [0.0, 1.0, 2.0]
    env = fit_exponential_envelope([1.0, 2.0, 4.0], ws)
    assert env.admissible
    assert env.upper_rate <= env.lower_rate + 1e-9
    assert env.spread >= 4.0 - 1e-6
    assert all(env.contains(v, w, rel_tol=1e-6) for v, w in zip([1.0, 2.0, 4.0], ws))


def test_empty_exponential_envelope_not_admissible():
    assert not fit_log_exponential_envelope([], []).admissible


def test_growth_envelope_decreasing():
    env = fit_growth_envelope([(64, 0.1), (256, 0.05), (1024, 0.03)], 1 / 3)
    assert env.growth == pytest.approx(1.0)
    assert env.monotone
    assert env.constant == pytest.approx(0.1 * 64 ** (1 / 3))


def test_growth_envelope_not_monotone():
    env = fit_growth_envelope([(64, 0.1), (256, 0.2)], 0.0)
    assert not env.monotone
    assert env.growth == pytest.approx(2.0)


def test_growth_envelope_keeps_sup_per_n():
    env = fit_growth_envelope([(64, 0.1), (64, 0.3), (64, 0.2)], 0.0)
    assert env.sup_per_n == ((64, 0.3),)


def test_growth_envelope_monotone_over_subset():
    env = fit_growth_envelope([(64, 0.1), (128, 0.2), (256, 0.05), (1024, 0.04), (4096, 0.03)], 1 / 3)
    assert not env.monotone
    assert env.monotone_over((256, 1024, 4096))
    assert env.monotone_over((2048,))
    assert not env.monotone_over((64, 128))


def test_log_linear_upper_exact_fit():
    f1 = [0.0, 1.0, 2.0, 0.0, 1.0, 2.0]
    f2 = [1.0, 1.0, 1.0, 4.0, 4.0, 4.0]
    values = [math.exp(1.0 + 0.5 * a - 2.0 * b) for a, b in zip(f1, f2)]
    bound = fit_log_linear_upper(values, [f1, f2], [1, -1])
    assert bound.log_const == pytest.approx(1.0, abs=1e-6)
    assert bound.rates == pytest.approx((0.5, 2.0), abs=1e-6)
    assert bound.max_gap == pytest.approx(0.0, abs=1e-6)
