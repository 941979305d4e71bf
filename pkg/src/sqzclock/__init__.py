"""Monte Carlo simulation and stability analysis of a two-ensemble optical
lattice clock comparison with cavity-QND spin squeezing."""
from .allan import AllanSeries, allan_deviation
from .analysis import (SqueezingReport, db, db_inv, gain_beyond_sql, optimal_beta,
                       qpn_instability, remove_linear_drift, spin_noise_reduction,
                       squeezing_metrics)
from .cavity import (CavityParams, LatticeConfig, QndOutcome, dispersive_shift,
                     jz_echo_measurement, measurement_imprecision, qnd_population_probe,
                     residual_light_shift)
from .config import ScenarioConfig, validate_config
from .noise import NoiseConfig, differential_offset, lo_phase
from .scenarios import run_scenario
from .sequence import (DarkTime, InitExcited, Pulse, QndEcho, Readout, ShotRecord, Transport,
                       clock_program, ramsey_contrast_curve, run_shot, run_trials,
                       transport_decay)
from .spin import CollectiveSpinState, EnsembleConfig, dephase, new_css, qpn, rotate, sample_jz

__version__ = "0.1.0"
