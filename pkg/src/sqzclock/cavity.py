"""Dispersive cavity QND readout of a collective spin.

The homodyne chain is collapsed into one imprecision coefficient ``k``
(``sigma_m = k / sqrt(n_photons)`` atoms per population probe). Probing
costs contrast through free-space scattering (``exp(-alpha * n)`` per probe)
and through the residual inhomogeneous light shift that the spin echo does
not cancel (``exp(-eps * n**2 / 2)`` per echo block, ``eps`` set by the
lattice geometry).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spin import CollectiveSpinState, rotate, sample_jz

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LatticeConfig:
    dimensionality: str = "2D"
    movable_depth: float = 19.0
    transverse_depth: float | None = 12.0
    temperature: float = 0.5

    def __post_init__(self):
        if self.dimensionality not in ("1D", "2D"):
            raise ValueError(f"dimensionality must be '1D' or '2D', got {self.dimensionality!r}")
        if self.movable_depth <= 0 or self.temperature <= 0:
            raise ValueError("lattice depths and temperature must be positive")
        if self.dimensionality == "2D":
            if self.transverse_depth is None or self.transverse_depth <= 0:
                raise ValueError("a 2D lattice needs a positive transverse_depth")


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity coupling and the calibrated readout coefficients.

    Angular quantities are in rad/s. Photon numbers count photons incident on
    the cavity in one 40 ms probe pulse.
    """
    coupling_g: float = TWO_PI * 5.1e3
    detuning_dc: float = -TWO_PI * 4.0e6
    probe_photons: float = 2.0e4
    imprecision_coeff: float = 8104.03
    scatter_coeff: float = 1.0e-6
    backaction_excess: float = 10.0
    # no-echo inhomogeneous light-shift variance, rad^2 / photon^2
    inhomogeneous_shift_1d: float = 6.0e-7
    inhomogeneous_shift_2d: float = 3.01606e-7
    # fraction of that variance surviving the spin echo
    echo_suppression_1d: float = 5.0e-3
    echo_suppression_2d: float = 1.7e-3
    probe_duration: float = 0.04

    def __post_init__(self):
        if not self.coupling_g > 0:
            raise ValueError("coupling_g must be positive")
        if self.detuning_dc == 0:
            raise ValueError("detuning_dc must be non-zero")
        if self.probe_photons < 0:
            raise ValueError("probe_photons must be non-negative")
        for name in ("imprecision_coeff", "scatter_coeff", "inhomogeneous_shift_1d",
                     "inhomogeneous_shift_2d", "echo_suppression_1d", "echo_suppression_2d",
                     "probe_duration"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.backaction_excess < 1.0:
            raise ValueError("backaction_excess must be >= 1")

    def light_shift_coeff(self, lattice: LatticeConfig) -> float:
        if lattice.dimensionality == "1D":
            return self.inhomogeneous_shift_1d
        return self.inhomogeneous_shift_2d

    def echo_residual_coeff(self, lattice: LatticeConfig) -> float:
        if lattice.dimensionality == "1D":
            return self.inhomogeneous_shift_1d * self.echo_suppression_1d
        return self.inhomogeneous_shift_2d * self.echo_suppression_2d


@dataclass(frozen=True)
class QndOutcome:
    estimate: float
    imprecision: float
    photons_used: float


def dispersive_shift(n_ground: float, params: CavityParams) -> float:
    """Cavity resonance shift ``N_g g^2 / delta_c`` in rad/s."""
    if n_ground < 0:
        raise ValueError("n_ground must be non-negative")
    if params.detuning_dc == 0:
        raise ValueError("detuning_dc must be non-zero")
    return n_ground * params.coupling_g ** 2 / params.detuning_dc


def measurement_imprecision(n_photons: float, params: CavityParams) -> float:
    """One-sigma population imprecision (atoms) of a single probe pulse."""
    if not n_photons > 0:
        raise ValueError("n_photons must be positive; a probe without photons has infinite imprecision")
    return params.imprecision_coeff / math.sqrt(n_photons)


def kalman_update(state: CollectiveSpinState, jz_outcome: float, noise_var: float,
                  backaction_excess: float = 1.0) -> CollectiveSpinState:
    """Condition the Gaussian state on a noisy outcome of the lab ``J_z``.

    The measured quantity is ``L cos(theta) + sin(theta) * polar_quadrature``.
    The anti-squeezed quadrature receives ``backaction_excess`` times the
    minimum back-action compatible with the information gained.
    """
    cos_t = 1.0 - 2.0 * state.excitation
    h = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    if h == 0.0 or not math.isfinite(noise_var):
        return state
    a, b, c = state.var_z, state.var_anti, state.cov_cross
    s = h * h * a + noise_var
    innovation = jz_outcome - state.jz_expectation()
    gain_z, gain_anti = h * a / s, h * c / s
    # a - h^2 a^2 / s written without the cancellation for precise probes
    var_z = a * noise_var / s
    cov = c * noise_var / s
    var_anti = b - h * h * c * c / s
    floor = state.uncertainty_floor()
    if noise_var > 0:
        var_anti += backaction_excess * floor * h * h / noise_var
    if var_z > 0:
        var_anti = max(var_anti, floor / var_z)
    return replace(state,
                   mean_jz=state.mean_jz + gain_z * innovation,
                   mean_anti=state.mean_anti + gain_anti * innovation,
                   var_z=var_z, var_anti=var_anti, cov_cross=cov)


def qnd_population_probe(state: CollectiveSpinState, n_photons: float, params: CavityParams,
                         rng: np.random.Generator, population: float | None = None,
                         apply_loss: bool = True) -> tuple[QndOutcome, CollectiveSpinState]:
    """Dispersive measurement of the ground-state population ``N_g = N/2 + J_z``.

    ``population`` is the true realization; it is drawn from the state when
    omitted. Returns the outcome and the conditional state.
    """
    if n_photons < 0:
        raise ValueError("n_photons must be non-negative")
    if n_photons == 0:
        return QndOutcome(math.nan, math.inf, 0.0), state
    half_n = 0.5 * state.atom_count
    if population is None:
        population = half_n + sample_jz(state, rng)
    sigma = measurement_imprecision(n_photons, params)
    estimate = population + float(rng.normal(0.0, sigma))
    new = kalman_update(state, estimate - half_n, sigma * sigma, params.backaction_excess)
    if apply_loss:
        new = replace(new, contrast=new.contrast * math.exp(-params.scatter_coeff * n_photons))
    return QndOutcome(estimate, sigma, n_photons), new


def echo_contrast_factor(n_photons: float, params: CavityParams, lattice: LatticeConfig,
                         echo: bool = True) -> float:
    """Contrast kept after the light-shift inhomogeneity of one probe block."""
    coeff = params.echo_residual_coeff(lattice) if echo else params.light_shift_coeff(lattice)
    return math.exp(-0.5 * coeff * n_photons ** 2)


def jz_echo_measurement(state: CollectiveSpinState, n_photons: float, pi_fidelity: float,
                        params: CavityParams, lattice: LatticeConfig, rng: np.random.Generator,
                        true_jz: float | None = None) -> tuple[float, CollectiveSpinState]:
    """Measure ``J_z`` as ``(N_g - N_e) / 2`` with two probes around a clock pi pulse.

    The returned state has been flipped by the pi pulse. Scattering and the
    echo residual are charged after both probes, so they do not bias the
    populations being read out.
    """
    if true_jz is None:
        true_jz = sample_jz(state, rng)
    half_n = 0.5 * state.atom_count
    first, state = qnd_population_probe(state, n_photons, params, rng,
                                        population=half_n + true_jz, apply_loss=False)
    state = rotate(state, "y", math.pi, fidelity=pi_fidelity)
    second, state = qnd_population_probe(state, n_photons, params, rng,
                                         population=half_n - true_jz, apply_loss=False)
    estimate = 0.5 * (first.estimate - second.estimate)
    if n_photons > 0:
        loss = math.exp(-2.0 * params.scatter_coeff * n_photons)
        loss *= echo_contrast_factor(n_photons, params, lattice)
        state = replace(state, contrast=state.contrast * loss)
    return estimate, state


def residual_light_shift(lattice: LatticeConfig, n_photons: float, rng: np.random.Generator,
                         params: CavityParams | None = None, echo: bool = True, size=None):
    """Sample the per-atom clock phase left by QND light shifts.

    With ``echo=True`` this is the residual after spin-echo cancellation;
    otherwise the full inhomogeneous shift of a single probe.
    """
    if n_photons < 0:
        raise ValueError("n_photons must be non-negative")
    params = params or CavityParams()
    coeff = params.echo_residual_coeff(lattice) if echo else params.light_shift_coeff(lattice)
    std = math.sqrt(coeff) * n_photons
    if std == 0.0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, std, size=size)
