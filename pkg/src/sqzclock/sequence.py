"""Declarative pulse/probe/transport programs and the shot engine.

A program is a list of steps executed in order on ensembles A and B. Clock
pulses are global; QND echo blocks act on the ensemble currently in the
cavity; transports move the lattice so that the other ensemble sits in the
cavity and cost both ensembles a little contrast.

The clock laser phase is tracked as a running random walk and enters as the
azimuth of every pulse axis, so it is common to both ensembles. Free
evolution (dark times and transports) advances A and B by the differential
frequency, split symmetrically.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence, Union

import numpy as np

from . import spin
from .cavity import CavityParams, LatticeConfig, jz_echo_measurement
from .noise import NoiseConfig, differential_offset, lo_phase
from .spin import CollectiveSpinState, EnsembleConfig

try:  # pragma: no cover - exercised on 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

TRANSPORT_DISTANCE = 140e-6
TRANSPORT_DURATION = 2.5e-3
# 91 % -> 84 % contrast after 16 transport roundtrips
DEFAULT_ROUNDTRIP_FACTOR = (0.84 / 0.91) ** (1.0 / 16.0)


class ProgramError(ValueError):
    """Structurally invalid program."""


@dataclass(frozen=True)
class InitExcited:
    duration: float = 0.0


@dataclass(frozen=True)
class Pulse:
    axis: str
    angle: float
    fidelity: float = 1.0
    phase_noise: float = 0.0
    duration: float = 0.0


@dataclass(frozen=True)
class DarkTime:
    duration: float


@dataclass(frozen=True)
class QndEcho:
    target: str
    photons: float
    role: str = "pre"
    pi_fidelity: float = 1.0
    duration: float = 0.08


@dataclass(frozen=True)
class Transport:
    target: str
    distance: float = TRANSPORT_DISTANCE
    duration: float = TRANSPORT_DURATION


@dataclass(frozen=True)
class Readout:
    target: str
    duration: float = 0.0


SequenceStep = Union[InitExcited, Pulse, DarkTime, QndEcho, Transport, Readout]
_KINDS = {
    "init_excited": InitExcited,
    "pulse": Pulse,
    "dark": DarkTime,
    "qnd_echo": QndEcho,
    "transport": Transport,
    "readout": Readout,
}
_KIND_OF = {cls: kind for kind, cls in _KINDS.items()}


@dataclass(frozen=True)
class ShotRecord:
    jz_pre_A: float = math.nan
    jz_pre_B: float = math.nan
    jz_final_A: float = math.nan
    jz_final_B: float = math.nan
    excitation_A: float = math.nan
    excitation_B: float = math.nan
    contrast_A: float = math.nan
    contrast_B: float = math.nan
    cycle_index: int = 0
    timestamp: float = 0.0


SHOT_FIELDS = tuple(f.name for f in fields(ShotRecord))


def program_duration(program: Sequence[SequenceStep]) -> float:
    return float(sum(step.duration for step in program))


def validate_program(program: Sequence[SequenceStep], start_in_cavity: str = "A") -> None:
    """Raise :class:`ProgramError` if the program cannot run."""
    in_cavity = start_in_cavity
    for i, step in enumerate(program):
        if type(step) not in _KIND_OF:
            raise ProgramError(f"step {i}: unknown step type {type(step).__name__}")
        if getattr(step, "duration", 0.0) < 0:
            raise ProgramError(f"step {i}: negative duration")
        target = getattr(step, "target", None)
        if target is not None and target not in ("A", "B"):
            raise ProgramError(f"step {i}: target must be 'A' or 'B', got {target!r}")
        if isinstance(step, Pulse) and step.axis not in ("x", "y", "z"):
            raise ProgramError(f"step {i}: pulse axis must be x, y or z")
        if isinstance(step, QndEcho):
            if step.target != in_cavity:
                raise ProgramError(
                    f"step {i}: QND echo on ensemble {step.target} while {in_cavity} is in the cavity")
            if step.photons < 0:
                raise ProgramError(f"step {i}: negative photon number")
            if step.role not in ("pre", "final"):
                raise ProgramError(f"step {i}: role must be 'pre' or 'final'")
        if isinstance(step, Transport):
            if step.target == in_cavity:
                raise ProgramError(f"step {i}: ensemble {step.target} is already in the cavity")
            in_cavity = step.target


def transport_decay(contrast: float, roundtrips: int, per_roundtrip_factor: float) -> float:
    """Contrast after ``roundtrips`` lattice roundtrips (geometric model)."""
    if roundtrips < 0:
        raise ValueError("roundtrips must be non-negative")
    return contrast * per_roundtrip_factor ** roundtrips


def shot_rng(seed: int, shot_index: int) -> np.random.Generator:
    """Generator for shot ``shot_index``; reproducible without running earlier shots."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shot_index,)))


def run_shot(program: Sequence[SequenceStep], ensembles: Sequence[EnsembleConfig],
             cavity: CavityParams, lattice: LatticeConfig, noise: NoiseConfig,
             rng: np.random.Generator, *, cycle_index: int = 0, cycle_time: float = 3.8,
             roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR, seed: int = 0,
             snapshots: dict | None = None) -> ShotRecord:
    """Execute one shot and return its record.

    ``rng`` is split into independent streams for the laser and for each
    ensemble, so changing the laser-noise level leaves the atomic noise
    realization untouched. If ``snapshots`` is given it receives the state of
    each ensemble just before its Final block (keys ``final_A``/``final_B``)
    and at the end of the shot (``end_A``/``end_B``).
    """
    validate_program(program)
    cfg = {e.label: e for e in ensembles}
    if set(cfg) != {"A", "B"}:
        raise ProgramError("ensembles must be labelled A and B")
    lo_rng, rng_a, rng_b = rng.spawn(3)
    streams = {"A": rng_a, "B": rng_b}
    states = {k: spin.new_css(c) for k, c in cfg.items()}

    timestamp = cycle_index * cycle_time
    delta_f = differential_offset(timestamp, noise)
    leg_factor = math.sqrt(roundtrip_factor)
    laser_phase = 0.0
    out: dict[str, float] = {}

    def evolve(duration: float) -> None:
        nonlocal laser_phase
        if duration <= 0:
            return
        if not noise.lo_uniform_phase:
            laser_phase += lo_phase(cycle_index, duration, lo_rng, noise, seed)
        half = math.pi * delta_f * duration
        for k, sign in (("A", 1.0), ("B", -1.0)):
            s = spin.dephase(states[k], duration, cfg[k].coherence_time)
            states[k] = spin.rotate(s, "z", sign * half) if half else s

    for step in program:
        if isinstance(step, InitExcited):
            states = {k: spin.excited_state(c) for k, c in cfg.items()}
        elif isinstance(step, Pulse):
            if noise.lo_uniform_phase:
                laser_phase = float(lo_rng.uniform(-math.pi, math.pi))
            axis = step.axis
            if axis != "z" and laser_phase:
                axis = spin.azimuth_shifted(axis, laser_phase)
            for k in states:
                states[k] = spin.rotate(states[k], axis, step.angle, step.fidelity, step.phase_noise)
        elif isinstance(step, (DarkTime,)):
            evolve(step.duration)
        elif isinstance(step, Transport):
            evolve(step.duration)
            for k in states:
                states[k] = spin.scale_contrast(states[k], leg_factor)
        elif isinstance(step, QndEcho):
            k = step.target
            if step.role == "final":
                out[f"contrast_{k}"] = states[k].contrast
                if snapshots is not None:
                    snapshots[f"final_{k}"] = states[k]
            # the echo pi pulse sits at the block midpoint
            evolve(0.5 * step.duration)
            est, states[k] = jz_echo_measurement(states[k], step.photons, step.pi_fidelity,
                                                 cavity, lattice, streams[k])
            evolve(0.5 * step.duration)
            if noise.technical_jz_noise > 0 and math.isfinite(est):
                est += float(streams[k].normal(0.0, noise.technical_jz_noise))
            out[f"jz_{step.role}_{k}"] = est
            if step.role == "final":
                n = states[k].atom_count
                out[f"excitation_{k}"] = min(1.0, max(0.0, 0.5 - est / n))
        elif isinstance(step, Readout):
            k = step.target
            out[f"contrast_{k}"] = states[k].contrast
            jz = spin.sample_jz(states[k], streams[k])
            if noise.technical_jz_noise > 0:
                jz += float(streams[k].normal(0.0, noise.technical_jz_noise))
            n = states[k].atom_count
            out[f"excitation_{k}"] = min(1.0, max(0.0, 0.5 - jz / n))

    for k, s in states.items():
        out.setdefault(f"contrast_{k}", s.contrast)
        out.setdefault(f"excitation_{k}", s.excitation)
        if snapshots is not None:
            snapshots[f"end_{k}"] = s
    return ShotRecord(cycle_index=cycle_index, timestamp=timestamp, **out)


def run_trials(program: Sequence[SequenceStep], ensembles: Sequence[EnsembleConfig],
               cavity: CavityParams, lattice: LatticeConfig, noise: NoiseConfig, *,
               seed: int, trials: int, start_index: int = 0, workers: int = 1,
               cycle_time: float = 3.8,
               roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> list[ShotRecord]:
    """Run ``trials`` shots; shot ``i`` uses :func:`shot_rng` ``(seed, i)``.

    The result is ordered by shot index whatever the number of workers.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    validate_program(program)

    def one(i: int) -> ShotRecord:
        return run_shot(program, ensembles, cavity, lattice, noise, shot_rng(seed, i),
                        cycle_index=i, cycle_time=cycle_time,
                        roundtrip_factor=roundtrip_factor, seed=seed)

    indices = range(start_index, start_index + trials)
    if workers <= 1:
        return [one(i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, indices))


def clock_program(T: float = 0.061, pre_photons: float = 0.0, final_photons: float = 4.0e5, *,
                  ramsey_phase_noise: float = 0.0, pulse_fidelity: float = 1.0,
                  pi_fidelity: float = 1.0, ramsey_roundtrips: int = 2,
                  post_roundtrips: int = 2, probe_duration: float = 0.04,
                  transport_duration: float = TRANSPORT_DURATION) -> list[SequenceStep]:
    """Two-ensemble comparison sequence with optional Pre ``J_z`` measurements.

    Init -> pi/2 (CSS) -> Pre echo A, B -> pi/2 -> T with transports
    centred on the midpoint -> pi/2 -> Final echo A, B -> extra roundtrips.
    ``pre_photons = 0`` gives the CSS-CSS comparison: the Pre blocks keep
    their echo pi pulses and timing but carry no light.
    """
    window_transport = 2 * ramsey_roundtrips * transport_duration
    if window_transport > T:
        raise ProgramError("transports do not fit into the interrogation time")
    half_dark = 0.5 * (T - window_transport)
    echo = 2.0 * probe_duration
    ramsey = Pulse("x", math.pi / 2, pulse_fidelity, ramsey_phase_noise)
    steps: list[SequenceStep] = [
        InitExcited(),
        Pulse("y", math.pi / 2, pulse_fidelity),
        QndEcho("A", pre_photons, "pre", pi_fidelity, echo),
        Transport("B", duration=transport_duration),
        QndEcho("B", pre_photons, "pre", pi_fidelity, echo),
        Transport("A", duration=transport_duration),
        ramsey,
        DarkTime(half_dark),
    ]
    for _ in range(ramsey_roundtrips):
        steps += [Transport("B", duration=transport_duration),
                  Transport("A", duration=transport_duration)]
    steps += [
        DarkTime(half_dark),
        ramsey,
        QndEcho("A", final_photons, "final", pi_fidelity, echo),
        Transport("B", duration=transport_duration),
        QndEcho("B", final_photons, "final", pi_fidelity, echo),
        Transport("A", duration=transport_duration),
    ]
    for _ in range(post_roundtrips):
        steps += [Transport("B", duration=transport_duration),
                  Transport("A", duration=transport_duration)]
    return steps


def ramsey_program(dark_time: float, roundtrips: int = 0,
                   transport_duration: float = TRANSPORT_DURATION) -> list[SequenceStep]:
    """Plain two-ensemble Ramsey sequence with optional transports mid-way."""
    window = 2 * roundtrips * transport_duration
    if window > dark_time:
        raise ProgramError("transports do not fit into the dark time")
    half = 0.5 * (dark_time - window)
    steps: list[SequenceStep] = [InitExcited(), Pulse("y", math.pi / 2), DarkTime(half)]
    for _ in range(roundtrips):
        steps += [Transport("B", duration=transport_duration),
                  Transport("A", duration=transport_duration)]
    steps += [DarkTime(half), Pulse("y", math.pi / 2), Readout("A"), Readout("B")]
    return steps


def program_contrast(program: Sequence[SequenceStep], ensembles: Sequence[EnsembleConfig],
                     cavity: CavityParams, lattice: LatticeConfig,
                     roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR) -> tuple[float, float]:
    """Readout contrast of A and B; contrast does not depend on the outcomes."""
    rec = run_shot(program, ensembles, cavity, lattice, NoiseConfig(lo_white_fm=0.0, drift_rate=0.0),
                   np.random.default_rng(0), roundtrip_factor=roundtrip_factor)
    return rec.contrast_A, rec.contrast_B


def ellipse_contrast(pa, pb) -> tuple[float, float]:
    """Fringe contrast of A and B from the parametric ellipse of (P_A, P_B).

    Fits a general conic by least squares and returns the full extents of the
    ellipse along each axis. Falls back to the variance estimator
    ``sqrt(8 var)`` (uniform fringe phase) when the scatter is degenerate.
    """
    x = np.asarray(pa, dtype=float)
    y = np.asarray(pb, dtype=float)
    fallback = (math.sqrt(8.0 * x.var()), math.sqrt(8.0 * y.var()))
    if x.size < 6:
        return fallback
    xm, ym = x.mean(), y.mean()
    xs, ys = x.std() or 1.0, y.std() or 1.0
    u, v = (x - xm) / xs, (y - ym) / ys
    design = np.column_stack([u * u, u * v, v * v, u, v, np.ones_like(u)])
    _, sv, vt = np.linalg.svd(design, full_matrices=False)
    a, b, c, d, e, f = vt[-1]
    det = 4.0 * a * c - b * b
    # a line-like cloud leaves two near-zero singular values
    if det <= 0 or sv[-2] < 1e-6 * sv[0]:
        return fallback
    u0, v0 = np.linalg.solve([[2 * a, b], [b, 2 * c]], [-d, -e])
    g = -(a * u0 * u0 + b * u0 * v0 + c * v0 * v0 + d * u0 + e * v0 + f)
    if g / det <= 0:
        return fallback
    half_u = math.sqrt(4.0 * c * g / det)
    half_v = math.sqrt(4.0 * a * g / det)
    return 2.0 * half_u * xs, 2.0 * half_v * ys


def ramsey_contrast_curve(dark_times: Sequence[float], coherence_time: float,
                          rng: np.random.Generator, trials: int, *,
                          atom_count: int = 30000, initial_contrast: float = 1.0,
                          differential_phase: float = math.pi / 2,
                          cavity: CavityParams | None = None,
                          lattice: LatticeConfig | None = None) -> list[tuple[float, float]]:
    """Monte Carlo two-ensemble Ramsey contrast versus dark time.

    The laser phase is randomized at every pulse (phase-scrambled fringe), and
    a differential phase opens the (P_A, P_B) ellipse. Returns
    ``(dark_time, two-ensemble mean contrast)`` rows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cavity = cavity or CavityParams()
    lattice = lattice or LatticeConfig()
    ensembles = (EnsembleConfig(atom_count, initial_contrast, coherence_time, "A"),
                 EnsembleConfig(atom_count, initial_contrast, coherence_time, "B"))
    rows = []
    for t in dark_times:
        offset = differential_phase / (2.0 * math.pi * t) if t > 0 else 0.0
        noise = NoiseConfig(lo_white_fm=0.0, lo_uniform_phase=True, drift_rate=0.0,
                            static_offset=offset)
        program = ramsey_program(t)
        seeds = rng.integers(0, 2 ** 63, size=trials)
        pa, pb = [], []
        for s in seeds:
            rec = run_shot(program, ensembles, cavity, lattice, noise, np.random.default_rng(int(s)))
            pa.append(rec.excitation_A)
            pb.append(rec.excitation_B)
        ca, cb = ellipse_contrast(pa, pb)
        rows.append((float(t), 0.5 * (ca + cb)))
    return rows


# --- program serialization -------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def program_to_toml(program: Sequence[SequenceStep]) -> str:
    """Serialize a program as a TOML array of ``[[step]]`` tables."""
    chunks = []
    for step in program:
        lines = ["[[step]]", f'kind = "{_KIND_OF[type(step)]}"']
        for f in fields(step):
            value = getattr(step, f.name)
            if f.name == "axis" and not isinstance(value, str):
                raise ProgramError("only named pulse axes can be serialized")
            lines.append(f"{f.name} = {_fmt(value)}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"


def program_from_toml(text: str) -> list[SequenceStep]:
    """Parse a program written by :func:`program_to_toml` or by hand.

    Pulse angles may be given in radians (``angle``) or in units of pi
    (``angle_pi``).
    """
    data = tomllib.loads(text)
    steps = []
    for i, entry in enumerate(data.get("step", [])):
        entry = dict(entry)
        kind = entry.pop("kind", None)
        if kind not in _KINDS:
            raise ProgramError(f"step {i}: unknown kind {kind!r}")
        if "angle_pi" in entry:
            entry["angle"] = math.pi * float(entry.pop("angle_pi"))
        cls = _KINDS[kind]
        allowed = {f.name for f in fields(cls)}
        unknown = set(entry) - allowed
        if unknown:
            raise ProgramError(f"step {i}: unknown keys {sorted(unknown)}")
        try:
            steps.append(cls(**entry))
        except TypeError as exc:
            raise ProgramError(f"step {i}: {exc}") from None
    validate_program(steps)
    return steps
