"""Deterministic predictions of the comparison statistics and parameter calibration.

The Gaussian model's conditional covariances do not depend on the measurement
outcomes, so a single noiseless pass through a program gives the variance of
every Final ``J_z`` conditioned on the Pre outcomes. These predictions are
exact for the optimal-``beta`` estimator in the limit of many shots and are
used to pin the free readout coefficients to the target operating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .cavity import CavityParams, LatticeConfig, measurement_imprecision
from .noise import NoiseConfig
from .sequence import (DEFAULT_ROUNDTRIP_FACTOR, QndEcho, SequenceStep, clock_program,
                       run_shot)
from .spin import EnsembleConfig

_QUIET = NoiseConfig(lo_white_fm=0.0, drift_rate=0.0)


@dataclass(frozen=True)
class EnsembleBudget:
    """Final-readout budget of one ensemble (atoms^2 unless noted)."""
    conditional_var: float   # Var(J_z^final | Pre) from the state
    readout_var: float       # imprecision of the Final echo estimate
    contrast: float          # readout contrast (dimensionless)
    atom_count: int

    @property
    def residual_var(self) -> float:
        return self.conditional_var + self.readout_var

    @property
    def spin_length(self) -> float:
        return 0.5 * self.contrast * self.atom_count


def _final_photons(program: Sequence[SequenceStep], label: str) -> float:
    for step in program:
        if isinstance(step, QndEcho) and step.role == "final" and step.target == label:
            return step.photons
    raise ValueError(f"program has no Final block on ensemble {label}")


def final_budgets(program, ensembles, cavity: CavityParams, lattice: LatticeConfig,
                  roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> dict[str, EnsembleBudget]:
    snaps: dict = {}
    run_shot(program, ensembles, cavity, lattice, _QUIET, np.random.default_rng(0),
             roundtrip_factor=roundtrip_factor, snapshots=snaps)
    out = {}
    for label in ("A", "B"):
        state = snaps[f"final_{label}"]
        n_f = _final_photons(program, label)
        readout = 0.5 * measurement_imprecision(n_f, cavity) ** 2 if n_f > 0 else 0.0
        out[label] = EnsembleBudget(state.jz_variance(), readout, state.contrast, state.atom_count)
    return out


def predicted_R(program, ensembles, cavity, lattice,
                roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> float:
    """Large-sample spin-noise reduction of the optimal-``beta`` estimator."""
    b = final_budgets(program, ensembles, cavity, lattice, roundtrip_factor)
    qpn_sum = 0.25 * (b["A"].atom_count + b["B"].atom_count)
    return (b["A"].residual_var + b["B"].residual_var) / qpn_sum


def predicted_coefficient(program, ensembles, cavity, lattice, T: float, cycle_time: float,
                          nu0: float, roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> float:
    """White-FM coefficient of the A-B comparison (laser and drift excluded)."""
    b = final_budgets(program, ensembles, cavity, lattice, roundtrip_factor)
    phase_var = sum(e.residual_var / e.spin_length ** 2 for e in b.values())
    return math.sqrt(phase_var * cycle_time) / (2.0 * math.pi * nu0 * T)


def readout_contrast(program, ensembles, cavity, lattice,
                     roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> float:
    """Mean A/B contrast recorded before the Final blocks."""
    b = final_budgets(program, ensembles, cavity, lattice, roundtrip_factor)
    return 0.5 * (b["A"].contrast + b["B"].contrast)


def readout_retention(program, ensembles, cavity, lattice,
                      roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> dict[str, float]:
    """Fraction of the preparation contrast left at each Final block.

    Every contrast loss is multiplicative, so this does not depend on the
    preparation contrast.
    """
    unit = [replace(e, initial_contrast=1.0) for e in ensembles]
    b = final_budgets(program, unit, cavity, lattice, roundtrip_factor)
    return {k: v.contrast for k, v in b.items()}


def readout_referenced(ensembles, program, cavity, lattice,
                       roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR):
    """Ensembles whose readout contrast under ``program`` equals their ``initial_contrast``.

    The preparation contrast of each ensemble is divided by the program's
    retention; raises ``ValueError`` if that would exceed 1.
    """
    retention = readout_retention(program, ensembles, cavity, lattice, roundtrip_factor)
    out = []
    for e in ensembles:
        prep = e.initial_contrast / retention[e.label]
        if not prep <= 1.0:
            raise ValueError(f"readout contrast {e.initial_contrast} of ensemble {e.label} is "
                             f"unreachable (retention {retention[e.label]:.4f})")
        out.append(replace(e, initial_contrast=prep))
    return tuple(out)


@dataclass(frozen=True)
class CalibrationTargets:
    initial_contrast: float = 0.82          # CSS readout contrast C_i
    R_db: float = -7.2                      # spin-noise reduction at the operating point
    xi2_db: float = -5.1                    # squeezing parameter at the operating point
    sss_coefficient: float = 8.0e-17        # SSS-SSS instability at 1 s
    pre_photons: float = 2.0e4
    final_photons: float = 4.0e5
    scatter_coeff: float = 1.0e-6           # alpha; the light-shift term absorbs the rest


@dataclass(frozen=True)
class CalibrationResult:
    prep_contrast: tuple[float, float]
    imprecision_coeff: float
    inhomogeneous_shift_2d: float
    ramsey_phase_noise: float
    cavity: CavityParams
    final_contrast: float
    predicted_R: float
    predicted_css: float
    predicted_sss: float


def calibrate(targets: CalibrationTargets = CalibrationTargets(), *, atom_count: int = 30000,
              coherence_time: float = 4.5, T: float = 0.061, cycle_time: float = 3.8,
              nu0: float = 429.228e12, cavity: CavityParams | None = None,
              lattice: LatticeConfig | None = None, ramsey_roundtrips: int = 2,
              post_roundtrips: int = 2,
              roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> CalibrationResult:
    """Solve for the free readout coefficients one at a time.

    1. preparation contrast so that the CSS program reads out ``C_i``;
    2. imprecision coefficient ``k`` so that the benchmark (ideal Ramsey
       rotations) reaches ``R``;
    3. residual light-shift coefficient so that ``C_f^2 / C_i`` equals
       ``R / xi2``;
    4. Ramsey-pulse phase noise so that the SSS comparison reaches the target
       instability.
    Steps 1-3 do not depend on later ones, so one pass is exact.
    """
    cavity = replace(cavity or CavityParams(), scatter_coeff=targets.scatter_coeff)
    lattice = lattice or LatticeConfig()
    n_pre, n_fin = targets.pre_photons, targets.final_photons

    def program(pre, phase_noise=0.0):
        return clock_program(T, pre, n_fin, ramsey_phase_noise=phase_noise,
                             ramsey_roundtrips=ramsey_roundtrips, post_roundtrips=post_roundtrips,
                             probe_duration=cavity.probe_duration)

    ens = readout_referenced(
        (EnsembleConfig(atom_count, targets.initial_contrast, coherence_time, "A"),
         EnsembleConfig(atom_count, targets.initial_contrast, coherence_time, "B")),
        program(0.0), cavity, lattice, roundtrip_factor)
    R_target = 10.0 ** (targets.R_db / 10.0)

    def r_gap(log_k):
        cav = replace(cavity, imprecision_coeff=math.exp(log_k))
        return predicted_R(program(n_pre), ens, cav, lattice, roundtrip_factor) - R_target

    k = math.exp(optimize.brentq(r_gap, math.log(10.0), math.log(1e6), xtol=1e-14))
    cavity = replace(cavity, imprecision_coeff=k)

    # xi2 = R / C^2 with C^2 = C_f^2 / C_i
    c2 = 10.0 ** ((targets.R_db - targets.xi2_db) / 10.0)
    cf_target = math.sqrt(c2 * targets.initial_contrast)

    def c_gap(log_shift):
        cav = replace(cavity, inhomogeneous_shift_2d=math.exp(log_shift))
        return readout_contrast(program(n_pre), ens, cav, lattice, roundtrip_factor) - cf_target

    if lattice.dimensionality != "2D":
        raise ValueError("calibration is defined for the 2D lattice")
    shift = math.exp(optimize.brentq(c_gap, math.log(1e-12), math.log(1e-3), xtol=1e-14))
    cavity = replace(cavity, inhomogeneous_shift_2d=shift)

    def s_gap(phase_noise):
        return predicted_coefficient(program(n_pre, phase_noise), ens, cavity, lattice, T,
                                     cycle_time, nu0, roundtrip_factor) - targets.sss_coefficient

    phase_noise = optimize.brentq(s_gap, 0.0, 0.2, xtol=1e-16)
    return CalibrationResult(
        prep_contrast=(ens[0].initial_contrast, ens[1].initial_contrast), imprecision_coeff=k, inhomogeneous_shift_2d=shift,
        ramsey_phase_noise=phase_noise, cavity=cavity,
        final_contrast=readout_contrast(program(n_pre), ens, cavity, lattice, roundtrip_factor),
        predicted_R=predicted_R(program(n_pre), ens, cavity, lattice, roundtrip_factor),
        predicted_css=predicted_coefficient(program(0.0, phase_noise), ens, cavity, lattice, T,
                                            cycle_time, nu0, roundtrip_factor),
        predicted_sss=predicted_coefficient(program(n_pre, phase_noise), ens, cavity, lattice, T,
                                            cycle_time, nu0, roundtrip_factor),
    )
