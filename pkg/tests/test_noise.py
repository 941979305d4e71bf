import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from sqzclock.cavity import CavityParams, LatticeConfig
from sqzclock.noise import (NoiseConfig, differential_offset, flicker_frequency, lo_phase,
                            lo_phase_std)
from sqzclock.sequence import (DarkTime, InitExcited, Pulse, Readout, ramsey_program, run_shot,
                               shot_rng)
from sqzclock.spin import EnsembleConfig

ENS = (EnsembleConfig(30000, 0.9, 4.5, "A"), EnsembleConfig(30000, 0.9, 4.5, "B"))


def test_zero_lo_noise_gives_zero_phase():
    noise = NoiseConfig(lo_white_fm=0.0)
    rng = np.random.default_rng(0)
    assert all(lo_phase(i, 0.061, rng, noise) == 0.0 for i in range(100))


def test_lo_phase_rejects_nonpositive_window():
    with pytest.raises(ValueError):
        lo_phase(0, 0.0, np.random.default_rng(0))


@given(T=st.floats(1e-3, 10.0), level=st.floats(1e-19, 1e-15))
def test_white_fm_variance_linear_in_T(T, level):
    noise = NoiseConfig(lo_white_fm=level)
    assert lo_phase_std(2 * T, noise) ** 2 == pytest.approx(2 * lo_phase_std(T, noise) ** 2, rel=1e-12)


def test_white_fm_sampled_variance():
    noise = NoiseConfig(lo_white_fm=1e-16)
    rng = np.random.default_rng(1)
    for T in (0.05, 0.2):
        draws = np.array([lo_phase(i, T, rng, noise) for i in range(40_000)])
        assert draws.var() == pytest.approx(lo_phase_std(T, noise) ** 2, rel=0.03)


def test_differential_offset_examples():
    noise = NoiseConfig(drift_rate=1.6e-6)
    assert differential_offset(0.0, noise) == 0.0
    assert differential_offset(1000.0, noise) == pytest.approx(1.6e-3, rel=1e-12)
    flat = NoiseConfig(drift_rate=0.0)
    assert all(differential_offset(t, flat) == 0.0 for t in (0.0, 1.0, 1e4))
    with pytest.raises(ValueError):
        differential_offset(-1.0, noise)


@given(rate=st.floats(0, 1e-3), offset=st.floats(-1, 1), dt=st.floats(0.1, 100), n=st.integers(3, 50))
def test_drift_second_differences_vanish(rate, offset, dt, n):
    noise = NoiseConfig(drift_rate=rate, static_offset=offset)
    t = np.arange(n) * dt
    values = np.array([differential_offset(x, noise) for x in t])
    assert np.allclose(np.diff(values, 2), 0.0, atol=1e-12 * (abs(offset) + rate * t[-1] + 1e-30))


def test_negative_levels_rejected():
    with pytest.raises(ValueError):
        NoiseConfig(lo_white_fm=-1.0)
    with pytest.raises(ValueError):
        NoiseConfig(nu0=0.0)


def test_scaled_lo():
    noise = NoiseConfig(lo_white_fm=2e-18, lo_flicker_floor=1e-17, drift_rate=1e-6)
    big = noise.scaled_lo(100.0)
    assert big.lo_white_fm == pytest.approx(2e-16) and big.lo_flicker_floor == pytest.approx(1e-15)
    assert big.drift_rate == noise.drift_rate


def test_flicker_is_pure_function_of_index():
    a = [flicker_frequency(i, 1e-17, seed=3) for i in range(50)]
    b = [flicker_frequency(i, 1e-17, seed=3) for i in reversed(range(50))][::-1]
    assert a == b
    assert flicker_frequency(5, 0.0, seed=3) == 0.0


def _angle(sn):
    a, b = sn["end_A"].direction(), sn["end_B"].direction()
    return math.acos(min(1.0, float(np.dot(a, b))))


def test_common_mode_leaves_differential_phase_exact():
    # first pulse at laser phase 0, the last one carries the accumulated laser phase
    T, delta = 0.061, 0.03
    program = ramsey_program(T)
    base = NoiseConfig(lo_white_fm=0.0, drift_rate=0.0, static_offset=delta / (2 * math.pi * T))
    loud = NoiseConfig(lo_white_fm=3e-15, drift_rate=0.0, static_offset=base.static_offset)
    spread = []
    for i in range(200):
        angles, exc = [], []
        for noise in (base, loud):
            sn = {}
            run_shot(program, ENS, CavityParams(), LatticeConfig(), noise, shot_rng(7, i),
                     snapshots=sn)
            angles.append(_angle(sn))
            exc.append(sn["end_A"].excitation)
        assert angles[1] == pytest.approx(angles[0], abs=1e-12)
        assert angles[0] == pytest.approx(delta, rel=1e-9)
        spread.append(exc[1] - exc[0])
    # the laser noise does move each ensemble on its own
    assert np.std(spread) > 0.1


def test_common_mode_differential_distribution_invariant():
    # final pulse about x: both ensembles read out at mid-fringe
    program = [InitExcited(), Pulse("y", math.pi / 2), DarkTime(0.061), Pulse("x", math.pi / 2),
               Readout("A"), Readout("B")]
    quiet = NoiseConfig(lo_white_fm=0.0, drift_rate=0.0)
    noisy = NoiseConfig(lo_white_fm=1e-16, drift_rate=0.0)
    cav, lat = CavityParams(), LatticeConfig()
    diffs = {}
    for name, noise, seed in (("quiet", quiet, 11), ("noisy", noisy, 12)):
        d, single = [], []
        for i in range(10_000):
            rec = run_shot(program, ENS, cav, lat, noise, shot_rng(seed, i))
            d.append(rec.excitation_A - rec.excitation_B)
            single.append(rec.excitation_A)
        diffs[name] = (np.array(d), np.array(single))
    p_diff = stats.ks_2samp(diffs["quiet"][0], diffs["noisy"][0]).pvalue
    assert p_diff > 1e-3
    # the single-ensemble signal is dominated by the laser at this level
    assert diffs["noisy"][1].std() > 5 * diffs["quiet"][1].std()
