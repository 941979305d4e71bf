"""Gaussian model of a collective spin ensemble.

The state keeps a mean Bloch direction (``excitation``, ``mean_phase``), a
mean spin length ``contrast * N / 2`` and a Gaussian distribution of the two
transverse quadratures in the local tangent frame of the mean spin:

* the *polar* quadrature ``z`` (unit vector pointing towards the ground-state
  pole; on the equator this is exactly the lab ``J_z`` fluctuation),
* the *azimuthal* quadrature ``anti`` (the phase-sensitive direction).

``mean_jz`` / ``mean_anti`` are conditional offsets (atoms) along those
quadratures and ``var_z`` / ``var_anti`` / ``cov_cross`` their covariance.
Contrast only rescales the mean spin length; offsets and variances are
carried by the collective quadratures and are not rescaled by decoherence.

Sign convention: ``J_z = (N_g - N_e) / 2``, so the ground state sits at the
``+z`` pole and ``excitation = (1 - cos(theta)) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}
_POLE_EPS = 1e-12


def wrap_phase(phase: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(phase, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class EnsembleConfig:
    atom_count: int
    initial_contrast: float = 1.0
    coherence_time: float = 4.5
    label: str = "A"

    def __post_init__(self):
        if int(self.atom_count) != self.atom_count or self.atom_count < 1:
            raise ValueError(f"atom_count must be a positive integer, got {self.atom_count!r}")
        if not 0.0 < self.initial_contrast <= 1.0:
            raise ValueError(f"initial_contrast must lie in (0, 1], got {self.initial_contrast!r}")
        if not self.coherence_time > 0.0:
            raise ValueError(f"coherence_time must be positive, got {self.coherence_time!r}")
        if self.label not in ("A", "B"):
            raise ValueError(f"label must be 'A' or 'B', got {self.label!r}")


@dataclass(frozen=True)
class CollectiveSpinState:
    atom_count: int
    mean_phase: float
    excitation: float
    contrast: float
    var_z: float
    var_anti: float
    mean_jz: float = 0.0
    mean_anti: float = 0.0
    cov_cross: float = 0.0

    @property
    def spin_length(self) -> float:
        """Mean spin length ``contrast * N / 2`` in atoms."""
        return 0.5 * self.contrast * self.atom_count

    def uncertainty_floor(self) -> float:
        """Lower bound on ``var_z * var_anti`` for the current spin length."""
        return (0.25 * self.contrast * self.atom_count) ** 2

    def direction(self) -> np.ndarray:
        cos_t = 1.0 - 2.0 * self.excitation
        sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
        return np.array([sin_t * math.cos(self.mean_phase),
                         sin_t * math.sin(self.mean_phase),
                         cos_t])

    def frame(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit vectors of the (polar, azimuthal) quadratures in the lab frame."""
        return _frame(self.excitation, self.mean_phase)

    def jz_expectation(self) -> float:
        """Conditional mean of the lab-frame ``J_z``."""
        cos_t = 1.0 - 2.0 * self.excitation
        sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
        return self.spin_length * cos_t + self.mean_jz * sin_t

    def jz_variance(self) -> float:
        """Conditional variance of the lab-frame ``J_z``."""
        cos_t = 1.0 - 2.0 * self.excitation
        return self.var_z * max(0.0, 1.0 - cos_t * cos_t)

    def covariance(self) -> np.ndarray:
        return np.array([[self.var_z, self.cov_cross],
                         [self.cov_cross, self.var_anti]])


def _frame(excitation: float, phase: float) -> tuple[np.ndarray, np.ndarray]:
    cos_t = 1.0 - 2.0 * excitation
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    cp, sp = math.cos(phase), math.sin(phase)
    e_anti = np.array([-sp, cp, 0.0])
    e_polar = np.array([-cos_t * cp, -cos_t * sp, sin_t])
    return e_polar, e_anti


def qpn(atom_count: int) -> float:
    """Projection-noise standard deviation ``sqrt(N) / 2`` of ``J_z`` for a CSS."""
    if atom_count < 0:
        raise ValueError("atom_count must be non-negative")
    return 0.5 * math.sqrt(atom_count)


def new_css(config: EnsembleConfig) -> CollectiveSpinState:
    """Coherent spin state on the equator, pointing along +x."""
    n = config.atom_count
    return CollectiveSpinState(
        atom_count=n,
        mean_phase=0.0,
        excitation=0.5,
        contrast=config.initial_contrast,
        var_z=n / 4.0,
        var_anti=n / 4.0,
    )


def excited_state(config: EnsembleConfig) -> CollectiveSpinState:
    """All atoms in the clock (excited) state, i.e. the ``-z`` pole."""
    n = config.atom_count
    return CollectiveSpinState(
        atom_count=n,
        mean_phase=0.0,
        excitation=1.0,
        contrast=config.initial_contrast,
        var_z=n / 4.0,
        var_anti=n / 4.0,
    )


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Right-handed rotation about ``axis`` ('x', 'y', 'z' or a 3-vector)."""
    u = _AXES[axis] if isinstance(axis, str) else np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    c, s = math.cos(angle), math.sin(angle)
    ux, uy, uz = u
    return np.array([
        [c + ux * ux * (1 - c), ux * uy * (1 - c) - uz * s, ux * uz * (1 - c) + uy * s],
        [uy * ux * (1 - c) + uz * s, c + uy * uy * (1 - c), uy * uz * (1 - c) - ux * s],
        [uz * ux * (1 - c) - uy * s, uz * uy * (1 - c) + ux * s, c + uz * uz * (1 - c)],
    ])


def mix_quadratures(state: CollectiveSpinState, phase_noise: float) -> CollectiveSpinState:
    """Average the covariance over a random rotation about the mean spin.

    ``phase_noise`` is the variance (rad^2) of the rotation angle. Offsets are
    left untouched.
    """
    if phase_noise < 0:
        raise ValueError("phase_noise must be non-negative")
    if phase_noise == 0.0:
        return state
    damp = math.exp(-2.0 * phase_noise)
    s2 = 0.5 * (1.0 - damp)
    c2 = 1.0 - s2
    a, b, c = state.var_z, state.var_anti, state.cov_cross
    return replace(state,
                   var_z=c2 * a + s2 * b,
                   var_anti=s2 * a + c2 * b,
                   cov_cross=damp * c)


def _unit_axis(axis) -> tuple[float, float, float]:
    if isinstance(axis, str):
        if axis not in _AXES:
            raise ValueError(f"axis must be 'x', 'y', 'z' or a 3-vector, got {axis!r}")
        return tuple(float(c) for c in _AXES[axis])
    ux, uy, uz = (float(c) for c in axis)
    norm = math.sqrt(ux * ux + uy * uy + uz * uz)
    if norm == 0.0:
        raise ValueError("rotation axis must be non-zero")
    return ux / norm, uy / norm, uz / norm


def azimuth_shifted(axis, phase: float) -> tuple[float, float, float]:
    """``axis`` turned by ``phase`` about z (a laser phase applied to a pulse axis)."""
    ux, uy, uz = _unit_axis(axis)
    c, s = math.cos(phase), math.sin(phase)
    return (c * ux - s * uy, s * ux + c * uy, uz)


def _rodrigues(u, c, s, v):
    """Rotate vector ``v`` about unit ``u`` (cos ``c``, sin ``s``)."""
    ux, uy, uz = u
    vx, vy, vz = v
    dot = ux * vx + uy * vy + uz * vz
    cx, cy, cz = uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx
    k = dot * (1.0 - c)
    return (vx * c + cx * s + ux * k, vy * c + cy * s + uy * k, vz * c + cz * s + uz * k)


def _frame_tuple(cos_t, sin_t, phase):
    cp, sp = math.cos(phase), math.sin(phase)
    return (-cos_t * cp, -cos_t * sp, sin_t), (-sp, cp, 0.0)


def rotate(state: CollectiveSpinState, axis, angle: float, fidelity: float = 1.0,
           phase_noise: float = 0.0) -> CollectiveSpinState:
    """Rotate the ensemble about a lab axis.

    The mean direction and the quadrature frame are rotated rigidly; the
    covariance and offsets are re-expressed in the tangent frame at the new
    mean direction. ``fidelity`` multiplies the contrast and ``phase_noise``
    (rad^2) mixes the two quadratures, see :func:`mix_quadratures`.
    """
    if not 0.0 < fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in (0, 1], got {fidelity!r}")
    u = _unit_axis(axis)
    if u[0] == 0.0 and u[1] == 0.0:
        # about z the tangent frame turns with the azimuth: a pure phase shift
        out = replace(state, mean_phase=wrap_phase(state.mean_phase + u[2] * angle),
                      contrast=state.contrast * fidelity)
        return mix_quadratures(out, phase_noise)

    c, s = math.cos(angle), math.sin(angle)
    cos_t = 1.0 - 2.0 * state.excitation
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
    cp, sp = math.cos(state.mean_phase), math.sin(state.mean_phase)
    e_polar, e_anti = _frame_tuple(cos_t, sin_t, state.mean_phase)
    mx, my, mz = _rodrigues(u, c, s, (sin_t * cp, sin_t * sp, cos_t))
    norm = math.sqrt(mx * mx + my * my + mz * mz)
    mx, my, mz = mx / norm, my / norm, mz / norm
    r_polar = _rodrigues(u, c, s, e_polar)
    r_anti = _rodrigues(u, c, s, e_anti)

    excitation = min(1.0, max(0.0, 0.5 * (1.0 - mz)))
    if math.hypot(mx, my) > _POLE_EPS:
        phase = math.atan2(my, mx)
    else:
        # at a pole the azimuth is fixed by where the old azimuthal axis went
        phase = math.atan2(-r_anti[0], r_anti[1])
    new_cos = 1.0 - 2.0 * excitation
    new_polar, new_anti = _frame_tuple(new_cos, math.sqrt(max(0.0, 1.0 - new_cos * new_cos)),
                                       phase)

    def dot(a, b):
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

    q00, q01 = dot(new_polar, r_polar), dot(new_polar, r_anti)
    q10, q11 = dot(new_anti, r_polar), dot(new_anti, r_anti)
    a, b, cc = state.var_z, state.var_anti, state.cov_cross
    # Q C Q^T for the symmetric 2x2 covariance
    var_z = q00 * q00 * a + 2.0 * q00 * q01 * cc + q01 * q01 * b
    var_anti = q10 * q10 * a + 2.0 * q10 * q11 * cc + q11 * q11 * b
    cov = q00 * q10 * a + (q00 * q11 + q01 * q10) * cc + q01 * q11 * b
    out = replace(state,
                  mean_phase=wrap_phase(phase),
                  excitation=excitation,
                  contrast=state.contrast * fidelity,
                  var_z=var_z, var_anti=var_anti, cov_cross=cov,
                  mean_jz=q00 * state.mean_jz + q01 * state.mean_anti,
                  mean_anti=q10 * state.mean_jz + q11 * state.mean_anti)
    return mix_quadratures(out, phase_noise)


def precess(state: CollectiveSpinState, phase: float) -> CollectiveSpinState:
    """Free precession by ``phase`` radians (rotation about z)."""
    return rotate(state, "z", phase)


def scale_contrast(state: CollectiveSpinState, factor: float) -> CollectiveSpinState:
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"contrast factor must lie in (0, 1], got {factor!r}")
    return replace(state, contrast=state.contrast * factor)


def dephase(state: CollectiveSpinState, dark_time: float,
            coherence_time: float) -> CollectiveSpinState:
    """Single-exponential loss of Ramsey contrast during a dark time."""
    if dark_time < 0:
        raise ValueError("dark_time must be non-negative")
    if coherence_time <= 0:
        raise ValueError("coherence_time must be positive")
    return replace(state, contrast=state.contrast * math.exp(-dark_time / coherence_time))


def sample_jz(state: CollectiveSpinState, rng: np.random.Generator) -> float:
    """Draw one realization of the lab-frame ``J_z`` from the Gaussian state."""
    mean = state.jz_expectation()
    var = state.jz_variance()
    if var <= 0.0:
        return mean
    return float(rng.normal(mean, math.sqrt(var)))
