import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqzclock.allan import (AllanSeries, allan_deviation, chi2_interval, fit_white_fm,
                            octave_factors, overlapping_adev, white_fm_edf)


def brute_adev(y, m):
    """Overlapping Allan deviation straight from the definition, in exact rationals."""
    y = [Fraction(float(v)) for v in y]
    terms = len(y) - 2 * m + 1
    total = Fraction(0)
    for j in range(terms):
        first = sum(y[j:j + m], Fraction(0)) / m
        second = sum(y[j + m:j + 2 * m], Fraction(0)) / m
        total += (second - first) ** 2
    return math.sqrt(float(total / (2 * terms)))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(y=st.lists(finite, min_size=2, max_size=64), data=st.data())
def test_matches_brute_force_bit_for_bit(y, data):
    m = data.draw(st.integers(1, len(y) // 2))
    assert overlapping_adev(y, m) == brute_adev(y, m)


@given(scale=st.sampled_from([1e-18, 1e-16, 1.0, 1e12]), seed=st.integers(0, 1000))
def test_bit_exact_across_scales(scale, seed):
    y = np.random.default_rng(seed).normal(0.0, scale, 40) + 3 * scale
    for m in (1, 3, 7, 20):
        assert overlapping_adev(y, m) == brute_adev(y, m)


def test_constant_series_is_zero():
    series = allan_deviation(np.full(100, 3.2e-16), 1.0)
    assert np.all(series.adev == 0.0)
    assert series.fitted_coefficient == 0.0


def test_white_noise_scaling():
    s, n = 2.0, 8192
    y = np.random.default_rng(3).normal(0.0, s, n)
    series = allan_deviation(y, 1.0)
    for tau, a, lo, hi in zip(series.taus, series.adev, series.ci_low, series.ci_high):
        lo3, hi3 = chi2_interval(a, white_fm_edf(n, int(tau)), math.erf(3 / math.sqrt(2)))
        assert lo3 <= s / math.sqrt(tau) <= hi3
        assert lo <= a <= hi
    assert series.fitted_coefficient == pytest.approx(s, rel=0.03)


def test_taus_and_errors():
    y = np.random.default_rng(0).normal(size=100)
    series = allan_deviation(y, 2.0, taus=[2.0, 10.0, 100.0])
    assert list(series.taus) == [2.0, 10.0, 100.0]
    with pytest.raises(ValueError):
        allan_deviation(y, 2.0, taus=[3.0])          # not a multiple of the cycle
    with pytest.raises(ValueError):
        allan_deviation(y, 2.0, taus=[102.0])        # beyond half the record
    with pytest.raises(ValueError):
        allan_deviation(y, 0.0)
    with pytest.raises(ValueError):
        overlapping_adev([1.0, math.nan, 2.0], 1)


def test_default_grid_is_octaves_to_quarter():
    assert octave_factors(100) == [1, 2, 4, 8, 16]
    assert octave_factors(679) == [1, 2, 4, 8, 16, 32, 64, 128]
    series = allan_deviation(np.random.default_rng(1).normal(size=679), 3.8)
    assert series.taus[-1] <= 679 * 3.8 / 4


def test_series_invariants():
    series = allan_deviation(np.random.default_rng(2).normal(size=500), 1.0)
    assert np.all(np.diff(series.taus) > 0)
    assert np.all(series.adev >= 0)
    assert np.all(series.ci_low <= series.adev) and np.all(series.adev <= series.ci_high)
    with pytest.raises(ValueError):
        AllanSeries(np.array([2.0, 1.0]), np.ones(2), np.ones(2), np.ones(2), np.ones(2), 1.0)


def test_edf_closed_form():
    # overlapping white-FM edf for N = 1024 frequency samples at m = 1
    n_phase = 1025
    expected = (3 * (n_phase - 1) / 2 - 2 * (n_phase - 2) / n_phase) * 4 / 9
    assert white_fm_edf(1024, 1) == pytest.approx(expected)


def test_fit_white_fm_exact_on_model():
    taus = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_white_fm(taus, 5e-17 / np.sqrt(taus), np.array([9.0, 5.0, 2.0, 1.0])) == \
        pytest.approx(5e-17, rel=1e-14)
