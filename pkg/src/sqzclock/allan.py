"""Overlapping Allan deviation with chi-squared confidence intervals.

The Allan variance is evaluated in exact integer arithmetic: the float
inputs are scaled to a common power-of-two denominator, so every window sum
and square is exact and the only rounding happens in the final conversion
and square root. The result is the correctly rounded deviation, independent
of summation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

ONE_SIGMA = math.erf(1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class AllanSeries:
    taus: np.ndarray
    adev: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    edf: np.ndarray
    fitted_coefficient: float
    n_samples: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.taus) <= 0):
            raise ValueError("taus must be strictly increasing")


def _as_integers(values: Sequence[float]) -> tuple[list[int], int]:
    """Exact integers ``k_i`` and denominator ``D`` with ``values[i] == k_i / D``."""
    fracs = [Fraction(float(v)) for v in values]
    denom = max((f.denominator for f in fracs), default=1)
    return [f.numerator * (denom // f.denominator) for f in fracs], denom


def overlapping_avar(freq: Sequence[float], m: int) -> float:
    """Overlapping Allan variance at ``m`` samples, correctly rounded."""
    y = np.asarray(freq, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("frequency series contains non-finite values")
    n = y.size
    if m < 1 or 2 * m > n:
        raise ValueError(f"averaging factor {m} needs at least {2 * m} samples, have {n}")
    ints, denom = _as_integers(y)
    prefix = [0]
    for k in ints:
        prefix.append(prefix[-1] + k)
    terms = n - 2 * m + 1
    total = 0
    for j in range(terms):
        d = prefix[j + 2 * m] - 2 * prefix[j + m] + prefix[j]
        total += d * d
    return float(Fraction(total, 2 * m * m * terms * denom * denom))


def overlapping_adev(freq: Sequence[float], m: int) -> float:
    return math.sqrt(overlapping_avar(freq, m))


def white_fm_edf(n_freq: int, m: int) -> float:
    """Equivalent degrees of freedom of the overlapping estimator for white FM."""
    n = n_freq + 1  # phase points
    edf = (3.0 * (n - 1) / (2.0 * m) - 2.0 * (n - 2) / n) * (4.0 * m * m / (4.0 * m * m + 5.0))
    return max(edf, 1.0)


def chi2_interval(adev: float, edf: float, confidence: float = ONE_SIGMA) -> tuple[float, float]:
    tail = 0.5 * (1.0 - confidence)
    lo = adev * math.sqrt(edf / stats.chi2.ppf(1.0 - tail, edf))
    hi = adev * math.sqrt(edf / stats.chi2.ppf(tail, edf))
    return lo, hi


def octave_factors(n_freq: int, max_fraction: float = 0.25) -> list[int]:
    """Averaging factors 1, 2, 4, ... up to ``max_fraction`` of the record."""
    out, m = [], 1
    while m <= max(1, int(n_freq * max_fraction)):
        out.append(m)
        m *= 2
    return out


def fit_white_fm(taus, adev, edf) -> float:
    """Coefficient ``a`` of ``adev = a / sqrt(tau)``, weighting points by their edf."""
    taus, adev, edf = (np.asarray(v, dtype=float) for v in (taus, adev, edf))
    return float(np.sum(edf * adev * np.sqrt(taus)) / np.sum(edf))


def allan_deviation(freq_series, cycle_time: float, taus=None,
                    confidence: float = ONE_SIGMA) -> AllanSeries:
    """Overlapping Allan deviation of a uniformly sampled fractional-frequency series.

    Parameters
    ----------
    freq_series : array_like
        Fractional frequency, one value per cycle.
    cycle_time : float
        Sampling interval in seconds.
    taus : array_like, optional
        Averaging times; multiples of ``cycle_time`` no longer than half the
        record. Octave spacing up to a quarter of the record by default.
    confidence : float
        Two-sided confidence level of the chi-squared interval (1 sigma by
        default).
    """
    y = np.asarray(freq_series, dtype=float)
    if cycle_time <= 0:
        raise ValueError("cycle_time must be positive")
    n = y.size
    if n < 2:
        raise ValueError("need at least two samples")
    if taus is None:
        factors = octave_factors(n)
    else:
        factors = []
        for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
            m = int(round(tau / cycle_time))
            if m < 1 or abs(m * cycle_time - tau) > 1e-9 * max(tau, cycle_time):
                raise ValueError(f"tau {tau} is not a positive multiple of the cycle time")
            if 2 * m > n:
                raise ValueError(f"tau {tau} exceeds half the record length")
            factors.append(m)
    factors = np.asarray(factors, dtype=int)
    adev = np.array([overlapping_adev(y, int(m)) for m in factors])
    edf = np.array([white_fm_edf(n, int(m)) for m in factors])
    ci = np.array([chi2_interval(a, e, confidence) for a, e in zip(adev, edf)])
    taus_out = factors * cycle_time
    return AllanSeries(taus=taus_out, adev=adev, ci_low=ci[:, 0], ci_high=ci[:, 1], edf=edf,
                       fitted_coefficient=fit_white_fm(taus_out, adev, edf), n_samples=n)
