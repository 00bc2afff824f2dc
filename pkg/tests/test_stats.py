import logging

import pytest
from hypothesis import given, strategies as st

from favorshare.stats import empirical_cdf, percentile_series


def test_cdf_three_points():
    assert empirical_cdf([3, 1, 2]) == [(1.0, pytest.approx(1 / 3)), (2.0, pytest.approx(2 / 3)),
                                        (3.0, 1.0)]


def test_cdf_all_equal():
    assert empirical_cdf([5.0] * 7) == [(5.0, 1.0)]


def test_cdf_empty_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert empirical_cdf([]) == []
    assert "no samples" in caplog.text


samples = st.lists(st.floats(0, 1e9, allow_nan=False), min_size=1, max_size=200)


@given(samples)
def test_cdf_monotone_and_bounded(xs):
    cdf = empirical_cdf(xs)
    values, probs = zip(*cdf)
    assert list(values) == sorted(set(values))
    assert all(0 < p <= 1 for p in probs)
    assert all(a <= b for a, b in zip(probs, probs[1:]))
    assert probs[-1] == 1.0


@given(samples)
def test_percentiles_invert_cdf(xs):
    cdf = empirical_cdf(xs)
    series = percentile_series(xs)
    assert [p for p, _ in series] == list(range(1, 100))
    rates = [r for _, r in series]
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    for p, r in series:
        # smallest value whose CDF reaches p/100
        reach = [v for v, q in cdf if q >= p / 100 - 1e-12]
        assert r == reach[0]
