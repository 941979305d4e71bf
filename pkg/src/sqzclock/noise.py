"""Clock-laser (common-mode) noise, differential drift and readout noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SR87_CLOCK_FREQUENCY = 429.228e12  # Hz

_FLICKER_KEY = 0xF11C


@dataclass(frozen=True)
class NoiseConfig:
    """Stochastic processes acting on a shot.

    ``lo_white_fm`` is the one-sided amplitude spectral density of the laser's
    fractional frequency noise (1/sqrt(Hz)). ``drift_rate`` and
    ``static_offset`` (Hz/s, Hz) describe the A-B frequency difference.
    ``technical_jz_noise`` (atoms) is added to every ``J_z`` estimate.
    """
    lo_white_fm: float = 1.0e-18
    lo_flicker_floor: float = 0.0
    lo_uniform_phase: bool = False
    drift_rate: float = 1.6e-6
    static_offset: float = 0.0
    technical_jz_noise: float = 0.0
    nu0: float = SR87_CLOCK_FREQUENCY

    def __post_init__(self):
        for name in ("lo_white_fm", "lo_flicker_floor", "drift_rate", "technical_jz_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.nu0 > 0:
            raise ValueError("nu0 must be positive")

    def scaled_lo(self, factor: float) -> "NoiseConfig":
        """Copy with every laser-noise amplitude multiplied by ``factor``."""
        from dataclasses import replace
        return replace(self, lo_white_fm=self.lo_white_fm * factor,
                       lo_flicker_floor=self.lo_flicker_floor * factor)


def lo_phase_std(duration: float, noise: NoiseConfig) -> float:
    """Standard deviation of the white-FM laser phase accumulated in ``duration``."""
    return 2.0 * math.pi * noise.nu0 * noise.lo_white_fm * math.sqrt(0.5 * duration)


def flicker_frequency(shot_index: int, floor: float, seed: int, octaves: int = 12) -> float:
    """Fractional frequency of a bounded flicker process at ``shot_index``.

    Voss-McCartney sum of ``octaves`` piecewise-constant Gaussian sequences,
    octave ``k`` refreshing every ``2**k`` shots. Every term is a pure function
    of ``(seed, k, shot_index >> k)``, so any shot can be evaluated alone.
    The Allan deviation is roughly flat at ``floor`` between 2 and
    ``2**octaves`` shots.
    """
    if floor == 0.0:
        return 0.0
    sigma = floor / math.sqrt(0.5 * octaves)
    total = 0.0
    for k in range(octaves):
        ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, _FLICKER_KEY, k, shot_index >> k])
        total += np.random.default_rng(ss).standard_normal()
    return sigma * total


def lo_phase(shot_index: int, interrogation_T: float, rng: np.random.Generator,
             noise: NoiseConfig | None = None, seed: int = 0) -> float:
    """Laser phase accumulated over a free-evolution window of ``interrogation_T``.

    The same value is applied to both ensembles. With ``lo_uniform_phase``
    the phase is uniform on (-pi, pi], modelling a laser that is not coherent
    over the window (used for contrast scans).
    """
    if not interrogation_T > 0:
        raise ValueError("interrogation_T must be positive")
    noise = noise or NoiseConfig()
    if noise.lo_uniform_phase:
        return float(rng.uniform(-math.pi, math.pi))
    phase = 0.0
    if noise.lo_white_fm > 0:
        phase += float(rng.normal(0.0, lo_phase_std(interrogation_T, noise)))
    if noise.lo_flicker_floor > 0:
        y = flicker_frequency(shot_index, noise.lo_flicker_floor, seed)
        phase += 2.0 * math.pi * noise.nu0 * y * interrogation_T
    return phase


def differential_offset(time: float, noise: NoiseConfig | None = None) -> float:
    """A-B clock frequency difference (Hz) at ``time`` seconds into the run."""
    if time < 0:
        raise ValueError("time must be non-negative")
    noise = noise or NoiseConfig()
    return noise.static_offset + noise.drift_rate * time
