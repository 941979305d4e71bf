import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqzclock import analysis
from sqzclock.cavity import CavityParams, LatticeConfig
from sqzclock.noise import NoiseConfig
from sqzclock.sequence import (DEFAULT_ROUNDTRIP_FACTOR, DarkTime, InitExcited, ProgramError, Pulse,
                               QndEcho, Readout, Transport, clock_program, ellipse_contrast,
                               program_contrast, program_duration, program_from_toml,
                               program_to_toml, ramsey_contrast_curve, ramsey_program, run_shot,
                               run_trials, shot_rng, transport_decay, validate_program)
from sqzclock.spin import EnsembleConfig

ENS = (EnsembleConfig(30000, 0.9, 4.5, "A"), EnsembleConfig(30000, 0.9, 4.5, "B"))
CAV, LAT = CavityParams(), LatticeConfig()
QUIET = NoiseConfig(lo_white_fm=0.0, drift_rate=0.0)


# --- validation ---------------------------------------------------------------

@pytest.mark.parametrize("program", [
    [QndEcho("B", 1e4)],                               # B is not in the cavity
    [Transport("A")],                                  # A already in the cavity
    [DarkTime(-1.0)],
    [Readout("C")],
    [Pulse("w", 1.0)],
    [QndEcho("A", 1e4, role="middle")],
    [QndEcho("A", -5.0)],
    [Transport("B"), QndEcho("A", 1e4)],
])
def test_malformed_programs_rejected(program):
    with pytest.raises(ProgramError):
        validate_program(program)
    with pytest.raises(ProgramError):
        run_shot(program, ENS, CAV, LAT, QUIET, np.random.default_rng(0))


def test_transports_alternate():
    validate_program([QndEcho("A", 1.0), Transport("B"), QndEcho("B", 1.0), Transport("A")])


def test_ensembles_must_be_labelled():
    with pytest.raises(ProgramError):
        run_shot([], (ENS[0], ENS[0]), CAV, LAT, QUIET, np.random.default_rng(0))


# --- run_shot ---------------------------------------------------------------

def test_css_readout_excitation_half():
    program = [InitExcited(), Pulse("y", math.pi / 2), Readout("A"), Readout("B")]
    exc = [run_shot(program, ENS, CAV, LAT, QUIET, shot_rng(1, i)).excitation_A for i in range(400)]
    qpn_scale = 0.5 * math.sqrt(30000) / 30000
    assert np.mean(exc) == pytest.approx(0.5, abs=5 * qpn_scale / 20)
    assert np.std(exc) == pytest.approx(qpn_scale, rel=0.15)


def test_zero_duration_program_reads_initial_state():
    rec = run_shot([], ENS, CAV, LAT, QUIET, np.random.default_rng(0))
    assert rec.contrast_A == 0.9 and rec.contrast_B == 0.9
    assert rec.excitation_A == 0.5 and rec.excitation_B == 0.5
    assert program_duration([]) == 0.0


def test_clock_sequence_structure_and_run():
    program = clock_program(0.061, 2e4, ramsey_roundtrips=2, post_roundtrips=2)
    ramsey = [i for i, s in enumerate(program) if isinstance(s, Pulse) and s.axis == "x"]
    assert len(ramsey) == 2
    inside = program[ramsey[0]:ramsey[1]]
    assert sum(isinstance(s, Transport) for s in inside) == 4   # two roundtrips
    assert math.isclose(sum(s.duration for s in inside), 0.061, rel_tol=1e-12)
    finals = [i for i, s in enumerate(program) if isinstance(s, QndEcho) and s.role == "final"]
    after = program[finals[-1] + 1:]
    assert sum(isinstance(s, Transport) for s in after) == 5    # return leg plus two roundtrips
    # dark halves are symmetric about the Ramsey midpoint
    darks = [s.duration for s in inside if isinstance(s, DarkTime)]
    assert darks[0] == darks[1]
    rec = run_shot(program, ENS, CAV, LAT, NoiseConfig(), shot_rng(1, 0))
    for name in ("jz_pre_A", "jz_pre_B", "jz_final_A", "jz_final_B"):
        assert math.isfinite(getattr(rec, name))
    assert 0.0 <= rec.excitation_A <= 1.0 and 0.0 <= rec.excitation_B <= 1.0


def test_transports_must_fit_interrogation():
    with pytest.raises(ProgramError):
        clock_program(0.005, ramsey_roundtrips=2)


def test_timing_bookkeeping_exact():
    # every timed step dephases; the total decay fixes the elapsed time
    for roundtrips in (0, 1, 3):
        program = ramsey_program(0.4, roundtrips)
        c_a, _ = program_contrast(program, ENS, CAV, LAT)
        elapsed = program_duration(program)
        assert elapsed == pytest.approx(0.4, rel=1e-12)
        expected = 0.9 * math.exp(-elapsed / 4.5) * DEFAULT_ROUNDTRIP_FACTOR ** roundtrips
        assert c_a == pytest.approx(expected, rel=1e-12)


def test_clock_program_duration():
    program = clock_program(0.061, 2e4)
    # init pulse, 4 echo blocks of 80 ms, 0.061 s window, transports outside the window
    outside = 2 + 2 + 4
    assert program_duration(program) == pytest.approx(4 * 0.08 + 0.061 + outside * 2.5e-3, rel=1e-12)


def test_shot_determinism_and_order_independence():
    program = clock_program(0.061, 2e4)
    a = run_trials(program, ENS, CAV, LAT, NoiseConfig(), seed=5, trials=24)
    b = run_trials(program, ENS, CAV, LAT, NoiseConfig(), seed=5, trials=24)
    c = run_trials(program, ENS, CAV, LAT, NoiseConfig(), seed=5, trials=24, workers=4)
    tail = run_trials(program, ENS, CAV, LAT, NoiseConfig(), seed=5, trials=4, start_index=20)
    assert a == b == c
    assert a[20:] == tail
    assert run_trials(program, ENS, CAV, LAT, NoiseConfig(), seed=6, trials=2) != a[:2]


def test_pre_removal_gives_css_statistics():
    sss = clock_program(0.061, 2e4)
    css = [replace(s, photons=0.0) if isinstance(s, QndEcho) and s.role == "pre" else s for s in sss]
    sharp = replace(CAV, imprecision_coeff=1e-3)
    n = 4000
    r_css = analysis.spin_noise_reduction(run_trials(css, ENS, sharp, LAT, QUIET, seed=2, trials=n),
                                          30000, 30000)
    assert abs(r_css - 1.0) < 3 * math.sqrt(2.0 / n)
    r_sss = analysis.spin_noise_reduction(run_trials(sss, ENS, CAV, LAT, QUIET, seed=2, trials=n),
                                          30000, 30000)
    assert r_sss < 0.5


# --- transport decay -------------------------------------------------------------

def test_transport_decay_examples():
    assert transport_decay(0.91, 0, DEFAULT_ROUNDTRIP_FACTOR) == 0.91
    assert DEFAULT_ROUNDTRIP_FACTOR == pytest.approx(0.99501, abs=5e-6)
    assert transport_decay(0.91, 16, DEFAULT_ROUNDTRIP_FACTOR) == pytest.approx(0.84, rel=1e-14)
    eight = transport_decay(0.91, 8, DEFAULT_ROUNDTRIP_FACTOR)
    assert eight == pytest.approx(math.sqrt(0.91 * 0.84), rel=1e-14)   # geometric midpoint
    assert eight == pytest.approx(0.8745, abs=5e-4)
    with pytest.raises(ValueError):
        transport_decay(0.9, -1, 0.99)


@given(c=st.floats(0.01, 1.0), a=st.integers(0, 40), b=st.integers(0, 40), f=st.floats(0.5, 1.0))
def test_transport_decay_composes(c, a, b, f):
    assert transport_decay(transport_decay(c, a, f), b, f) == pytest.approx(
        transport_decay(c, a + b, f), rel=1e-12)


# --- contrast curve -----------------------------------------------------------------

def test_zero_dark_time_contrast_is_initial():
    c_a, c_b = program_contrast(ramsey_program(0.0), ENS, CAV, LAT)
    assert c_a == 0.9 and c_b == 0.9
    rows = ramsey_contrast_curve([0.0], 4.5, np.random.default_rng(3), 1000,
                                 initial_contrast=0.9)
    assert rows[0][1] == pytest.approx(0.9, rel=0.05)


@given(t=st.floats(0.0, 3.0))
def test_doubling_dark_time_squares_decay(t):
    c0 = program_contrast(ramsey_program(0.0), ENS, CAV, LAT)[0]
    c1 = program_contrast(ramsey_program(t), ENS, CAV, LAT)[0]
    c2 = program_contrast(ramsey_program(2 * t), ENS, CAV, LAT)[0]
    assert c2 / c0 == pytest.approx((c1 / c0) ** 2, rel=1e-12)


def test_ellipse_contrast_recovers_amplitudes():
    phi = np.random.default_rng(4).uniform(-math.pi, math.pi, 300)
    pa = 0.5 - 0.4 * np.cos(phi + 0.7)
    pb = 0.5 - 0.3 * np.cos(phi - 0.7)
    ca, cb = ellipse_contrast(pa, pb)
    assert ca == pytest.approx(0.8, rel=1e-6) and cb == pytest.approx(0.6, rel=1e-6)
    # degenerate (in-phase) fringe falls back to the variance estimator
    la, lb = ellipse_contrast(pa, pa)
    assert la == pytest.approx(math.sqrt(8 * pa.var()))


# --- serialization --------------------------------------------------------------------

def test_program_toml_round_trip():
    program = clock_program(0.061, 2e4, ramsey_phase_noise=1e-3, pulse_fidelity=0.99)
    assert program_from_toml(program_to_toml(program)) == program


def test_program_toml_by_hand():
    text = """
[[step]]
kind = "init_excited"

[[step]]
kind = "pulse"
axis = "y"
angle_pi = 0.5

[[step]]
kind = "dark"
duration = 0.1

[[step]]
kind = "readout"
target = "A"
"""
    program = program_from_toml(text)
    assert program[1] == Pulse("y", math.pi / 2)
    with pytest.raises(ProgramError):
        program_from_toml('[[step]]\nkind = "teleport"\n')
    with pytest.raises(ProgramError):
        program_from_toml('[[step]]\nkind = "dark"\nduration = 1.0\ncolour = "red"\n')
