import math

import pytest

from sqzclock import analysis
from sqzclock.calibration import (CalibrationTargets, calibrate, predicted_R, readout_contrast,
                                  readout_referenced)
from sqzclock.cavity import CavityParams, LatticeConfig
from sqzclock.sequence import clock_program
from sqzclock.spin import EnsembleConfig


@pytest.fixture(scope="module")
def result():
    return calibrate()


def test_frozen_defaults_match_calibration(result, default_config):
    # the bundled TOML stores the solved values rounded to six significant figures
    cav, seq = default_config.cavity, default_config.sequence
    assert cav.imprecision_coeff == pytest.approx(result.imprecision_coeff, rel=1e-6)
    assert cav.inhomogeneous_shift_2d == pytest.approx(result.inhomogeneous_shift_2d, rel=1e-5)
    assert seq.ramsey_phase_noise == pytest.approx(result.ramsey_phase_noise, rel=1e-5)
    assert CavityParams().imprecision_coeff == cav.imprecision_coeff


def test_targets_reached(result):
    t = CalibrationTargets()
    assert analysis.db(result.predicted_R) == pytest.approx(t.R_db, abs=1e-9)
    rep = analysis.squeezing_metrics(result.predicted_R, t.initial_contrast, result.final_contrast)
    assert rep.xi2_db == pytest.approx(t.xi2_db, abs=1e-9)
    assert result.final_contrast == pytest.approx(0.711, abs=5e-4)
    assert result.predicted_sss == pytest.approx(t.sss_coefficient, rel=1e-9)


def test_css_prediction_near_projection_limit(result):
    # the solved CSS coefficient sits within 1% of the closed-form QPN limit
    limit = analysis.qpn_instability(30000, 0.82, 0.061, 3.8, 429.228e12)
    assert result.predicted_css == pytest.approx(limit, rel=0.01)
    assert result.predicted_css > limit


def test_readout_referencing_hits_requested_contrast():
    cav, lat = CavityParams(), LatticeConfig()
    css = clock_program(0.061, 0.0)
    raw = (EnsembleConfig(30000, 0.82, 4.5, "A"), EnsembleConfig(30000, 0.82, 4.5, "B"))
    ens = readout_referenced(raw, css, cav, lat)
    assert all(e.initial_contrast > 0.82 for e in ens)
    assert readout_contrast(css, ens, cav, lat) == pytest.approx(0.82, rel=1e-12)
    with pytest.raises(ValueError):
        readout_referenced((EnsembleConfig(30000, 0.99, 4.5, "A"),
                            EnsembleConfig(30000, 0.99, 4.5, "B")), css, cav, lat)


def test_more_imprecision_means_less_reduction():
    lat = LatticeConfig()
    ens = (EnsembleConfig(30000, 0.87, 4.5, "A"), EnsembleConfig(30000, 0.89, 4.5, "B"))
    program = clock_program(0.061, 2e4)
    values = [predicted_R(program, ens, CavityParams(imprecision_coeff=k), lat)
              for k in (2e3, 8e3, 3e4)]
    assert values[0] < values[1] < values[2] < 1.0
    assert not math.isnan(values[0])
