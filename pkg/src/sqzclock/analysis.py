"""Squeezing metrics, estimators and stability bookkeeping."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np
from scipy import optimize

from .allan import AllanSeries, allan_deviation
from .sequence import SHOT_FIELDS


def db(linear: float) -> float:
    if not linear > 0:
        raise ValueError(f"dB conversion needs a positive value, got {linear!r}")
    return 10.0 * math.log10(linear)


def db_inv(decibels: float) -> float:
    return 10.0 ** (decibels / 10.0)


def records_to_columns(records) -> dict[str, np.ndarray]:
    """Column arrays from a list of :class:`ShotRecord` or a mapping of columns."""
    if isinstance(records, Mapping):
        return {k: np.asarray(v, dtype=float) for k, v in records.items()}
    rows = list(records)
    return {name: np.array([getattr(r, name) for r in rows], dtype=float) for name in SHOT_FIELDS}


def optimal_beta(pre, final) -> float:
    """Gain minimizing ``Var(final - beta * pre)``: ``Cov(final, pre) / Var(pre)``."""
    pre = np.asarray(pre, dtype=float)
    final = np.asarray(final, dtype=float)
    if pre.shape != final.shape:
        raise ValueError("pre and final must have the same length")
    if pre.size < 2:
        raise ValueError("need at least two paired samples")
    dp = pre - pre.mean()
    var = float(np.dot(dp, dp))
    if var == 0.0:
        raise ValueError("pre series has zero variance")
    return float(np.dot(dp, final - final.mean()) / var)


def _has_pre(cols, label: str) -> bool:
    pre = cols.get(f"jz_pre_{label}")
    return pre is not None and bool(np.all(np.isfinite(pre)))


def differential_betas(records, scale_A: float = 1.0, scale_B: float = 1.0) -> tuple[float, float]:
    """Gains minimizing ``Var(s_A (f_A - b_A p_A) - s_B (f_B - b_B p_B))``.

    Fitting both gains against the A-B difference keeps noise common to the
    two Final outcomes (laser phase) out of the estimate; for independent
    ensembles the result coincides with :func:`optimal_beta` per ensemble.
    Ensembles without Pre outcomes get ``beta = 0``.
    """
    cols = records_to_columns(records)
    target = scale_A * cols["jz_final_A"] - scale_B * cols["jz_final_B"]
    columns, labels = [], []
    for label, sign, scale in (("A", 1.0, scale_A), ("B", -1.0, scale_B)):
        if _has_pre(cols, label):
            columns.append(sign * scale * cols[f"jz_pre_{label}"])
            labels.append(label)
    betas = {"A": 0.0, "B": 0.0}
    if columns:
        design = np.column_stack(columns)
        design = design - design.mean(axis=0)
        centred = target - target.mean()
        gram = design.T @ design
        if np.linalg.matrix_rank(gram) < len(columns):
            raise ValueError("pre series are degenerate (zero variance or collinear)")
        coef = np.linalg.solve(gram, design.T @ centred)
        betas.update(zip(labels, (float(c) for c in coef)))
    return betas["A"], betas["B"]


def _deltas(cols, beta_a: float, beta_b: float) -> tuple[np.ndarray, np.ndarray]:
    da = cols["jz_final_A"] - (beta_a * cols["jz_pre_A"] if beta_a else 0.0)
    db_ = cols["jz_final_B"] - (beta_b * cols["jz_pre_B"] if beta_b else 0.0)
    return da, db_


def spin_noise_reduction(records, N_A: int, N_B: int, *, return_betas: bool = False):
    """Two-ensemble spin-noise reduction relative to the combined projection noise.

    ``R = Var(J_A^delta - J_B^delta) / ((N_A + N_B) / 4)`` with
    ``J^delta = J^final - beta * J^pre`` and the gains from
    :func:`differential_betas`.
    """
    cols = records_to_columns(records)
    if cols["jz_final_A"].size < 3:
        raise ValueError("need at least three records")
    if not (np.all(np.isfinite(cols["jz_final_A"])) and np.all(np.isfinite(cols["jz_final_B"]))):
        raise ValueError("records lack Final J_z outcomes")
    beta_a, beta_b = differential_betas(cols)
    da, dbb = _deltas(cols, beta_a, beta_b)
    r = float(np.var(da - dbb, ddof=1) / ((N_A + N_B) / 4.0))
    if return_betas:
        return r, beta_a, beta_b
    return r


def variance_ratio_stderr(value: float, n: int) -> float:
    """Standard error of a Gaussian sample-variance ratio estimated from ``n`` points."""
    return value * math.sqrt(2.0 / (n - 1))


@dataclass(frozen=True)
class SqueezingReport:
    R_linear: float
    C_initial: float
    C_final: float
    beta_A: float = math.nan
    beta_B: float = math.nan

    def __post_init__(self):
        if not 0.0 < self.C_initial <= 1.0:
            raise ValueError("C_initial must lie in (0, 1]")
        if not 0.0 <= self.C_final <= 1.0:
            raise ValueError("C_final must lie in [0, 1]")

    @property
    def C_effective(self) -> float:
        return self.C_final / math.sqrt(self.C_initial)

    @property
    def xi2(self) -> float:
        return self.R_linear / self.C_effective ** 2

    @property
    def xi2_wineland(self) -> float:
        return self.xi2 / self.C_initial

    @property
    def R_db(self) -> float:
        return db(self.R_linear)

    @property
    def xi2_db(self) -> float:
        return db(self.xi2)

    @property
    def xi2_wineland_db(self) -> float:
        return db(self.xi2_wineland)

    def as_dict(self) -> dict:
        out = asdict(self)
        for name in ("C_effective", "xi2", "xi2_wineland", "R_db", "xi2_db", "xi2_wineland_db"):
            out[name] = getattr(self, name)
        return out

    def display(self) -> dict[str, str]:
        """dB to 0.1 dB, linear quantities to four significant figures."""
        return {
            "beta_A": f"{self.beta_A:.4g}", "beta_B": f"{self.beta_B:.4g}",
            "R": f"{self.R_linear:.4g} ({self.R_db:.1f} dB)",
            "C_initial": f"{self.C_initial:.4g}", "C_final": f"{self.C_final:.4g}",
            "C_effective": f"{self.C_effective:.4g}",
            "xi2": f"{self.xi2:.4g} ({self.xi2_db:.1f} dB)",
            "xi2_wineland": f"{self.xi2_wineland:.4g} ({self.xi2_wineland_db:.1f} dB)",
        }


def squeezing_metrics(R: float, C_i: float, C_f: float, beta_A: float = math.nan,
                      beta_B: float = math.nan) -> SqueezingReport:
    return SqueezingReport(R_linear=R, C_initial=C_i, C_final=C_f, beta_A=beta_A, beta_B=beta_B)


def squeezing_report(records, N_A: int, N_B: int, C_i: float, C_f: float | None = None) -> SqueezingReport:
    """Report from Pre/Final records; ``C_f`` defaults to the mean recorded contrast."""
    r, ba, bb = spin_noise_reduction(records, N_A, N_B, return_betas=True)
    if C_f is None:
        cols = records_to_columns(records)
        C_f = float(0.5 * (np.mean(cols["contrast_A"]) + np.mean(cols["contrast_B"])))
    return squeezing_metrics(r, C_i, C_f, ba, bb)


def qpn_instability(N_total_per_ensemble: float, contrast: float, T: float, T_c: float,
                    nu0: float) -> float:
    """Projection-noise limit of the differential comparison, as ``sigma(tau) sqrt(tau)``."""
    for name, v in (("N", N_total_per_ensemble), ("contrast", contrast), ("T", T), ("T_c", T_c),
                    ("nu0", nu0)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    phase = math.sqrt(2.0) / (contrast * math.sqrt(N_total_per_ensemble))
    return phase / (2.0 * math.pi * nu0 * T) * math.sqrt(T_c)


def cycle_time_for(coefficient: float, N: float, contrast: float, T: float, nu0: float) -> float:
    """Cycle time at which :func:`qpn_instability` equals ``coefficient``."""
    return (coefficient / qpn_instability(N, contrast, T, 1.0, nu0)) ** 2


def gain_beyond_sql(css_coefficient: float, sss_coefficient: float, C_i: float) -> dict[str, float]:
    """Metrological gain of the squeezed comparison under two bookkeeping conventions.

    ``variance_ratio_unit_contrast_db`` compares the squeezed instability with
    the projection limit at unit contrast (``css * C_i``). ``css_gain_minus_contrast_db``
    subtracts the initial-contrast correction ``-10 log10(C_i)`` from the
    measured CSS-to-SSS gain.
    """
    css_gain = 20.0 * math.log10(css_coefficient / sss_coefficient)
    contrast_correction = -db(C_i)
    return {
        "css_to_sss_gain_db": css_gain,
        "contrast_correction_db": contrast_correction,
        "variance_ratio_unit_contrast_db": 20.0 * math.log10(css_coefficient * C_i / sss_coefficient),
        "css_gain_minus_contrast_db": css_gain - contrast_correction,
    }


def remove_linear_drift(freq_series, times) -> np.ndarray:
    """Subtract the least-squares line; the residual has zero mean and zero slope."""
    y = np.asarray(freq_series, dtype=float)
    t = np.asarray(times, dtype=float)
    if y.size < 3 or y.shape != t.shape:
        raise ValueError("need at least three points with matching times")
    tc = t - t.mean()
    design = np.column_stack([np.ones_like(tc), tc])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ coef


def linear_drift_rate(freq_series, times) -> float:
    t = np.asarray(times, dtype=float)
    y = np.asarray(freq_series, dtype=float)
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


def frequency_series(records, N_A: int, N_B: int, T: float, nu0: float) -> np.ndarray:
    """Fractional A-B frequency per shot from the Pre/Final ``J_z`` records.

    Each ensemble's phase is ``J^delta / (C N / 2)`` using its mean readout
    contrast; the gains minimize the variance of the normalized difference.
    """
    cols = records_to_columns(records)
    slope_a = 0.5 * N_A * float(np.mean(cols["contrast_A"]))
    slope_b = 0.5 * N_B * float(np.mean(cols["contrast_B"]))
    beta_a, beta_b = differential_betas(cols, 1.0 / slope_a, 1.0 / slope_b)
    da, dbb = _deltas(cols, beta_a, beta_b)
    return (da / slope_a - dbb / slope_b) / (2.0 * math.pi * nu0 * T)


def clock_stability(records, N_A: int, N_B: int, T: float, nu0: float, cycle_time: float,
                    remove_drift: bool = True, taus=None) -> tuple[np.ndarray, AllanSeries]:
    """Frequency series (drift removed if requested) and its Allan deviation."""
    y = frequency_series(records, N_A, N_B, T, nu0)
    if remove_drift:
        times = records_to_columns(records)["timestamp"]
        y = remove_linear_drift(y, times)
    return y, allan_deviation(y, cycle_time, taus)


def fit_exponential_decay(times, values) -> tuple[float, float]:
    """Fit ``C0 * exp(-t / tau)``; returns ``(C0, tau)``."""
    t = np.asarray(times, dtype=float)
    c = np.asarray(values, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two points")
    slope, intercept = np.polyfit(t, np.log(c), 1)
    p0 = (math.exp(intercept), -1.0 / slope if slope < 0 else 10.0 * (t.max() or 1.0))
    (c0, tau), _ = optimize.curve_fit(lambda x, a, b: a * np.exp(-x / b), t, c, p0=p0)
    return float(c0), float(tau)


def extrapolate(coefficient: float, tau: float) -> float:
    """White-FM instability ``coefficient / sqrt(tau)``."""
    return coefficient / math.sqrt(tau)
