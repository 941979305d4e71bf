"""Scenario configuration: TOML parsing and validation.

All problems in a file are collected and reported together, each prefixed
with its dotted field path (``sequence.T``, ``ensembles.B.atom_count``).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .cavity import CavityParams, LatticeConfig
from .noise import NoiseConfig
from .sequence import DEFAULT_ROUNDTRIP_FACTOR, TRANSPORT_DURATION
from .spin import EnsembleConfig

try:  # pragma: no cover
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

SCENARIOS = ("clock-comparison", "photon-sweep", "contrast-decay", "transport-decay", "analyze")
MODES = ("css", "sss", "both")
CONFIG_DIR_ENV = "SQZCLOCK_CONFIG_DIR"
DEFAULT_CONFIG_NAME = "default.toml"
TWO_PI = 2.0 * math.pi
_U64 = 2 ** 64


@dataclass(frozen=True)
class SequenceParams:
    T: float = 0.061
    pre_photons: float = 2.0e4
    final_photons: float = 4.0e5
    ramsey_roundtrips: int = 2
    post_roundtrips: int = 2
    ramsey_phase_noise: float = 2.21372e-3  # calibrated; see calibration.calibrate
    pulse_fidelity: float = 1.0
    pi_fidelity: float = 1.0
    cycle_time: float = 3.8
    roundtrip_factor: float = DEFAULT_ROUNDTRIP_FACTOR
    transport_duration: float = TRANSPORT_DURATION
    program_file: str | None = None


@dataclass(frozen=True)
class PhotonSweepParams:
    photons: tuple[float, ...] = (2e3, 4e3, 7e3, 1e4, 1.4e4, 2e4, 2.8e4, 4e4, 5.6e4, 8e4)
    trials: int | None = None


@dataclass(frozen=True)
class ContrastDecayParams:
    dark_times: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0)
    trials: int | None = 500
    differential_phase: float = math.pi / 2


@dataclass(frozen=True)
class TransportDecayParams:
    initial_contrast: float = 0.91
    max_roundtrips: int = 16
    dark_time: float = 0.1


@dataclass(frozen=True)
class AnalyzeParams:
    input: str | None = None
    cycle_time: float | None = None
    remove_drift: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    trials: int
    seed: int
    output_path: str = "results"
    mode: str = "both"
    workers: int = 1
    ensembles: tuple[EnsembleConfig, EnsembleConfig] = (
        EnsembleConfig(30000, 0.82, 4.5, "A"), EnsembleConfig(30000, 0.82, 4.5, "B"))
    # treat initial_contrast as the CSS readout contrast of the comparison program
    contrast_is_readout: bool = True
    cavity: CavityParams = field(default_factory=CavityParams)
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sequence: SequenceParams = field(default_factory=SequenceParams)
    photon_sweep: PhotonSweepParams = field(default_factory=PhotonSweepParams)
    contrast_decay: ContrastDecayParams = field(default_factory=ContrastDecayParams)
    transport_decay: TransportDecayParams = field(default_factory=TransportDecayParams)
    analyze: AnalyzeParams = field(default_factory=AnalyzeParams)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# --- field checks ----------------------------------------------------------

def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _unit_interval(v):
    return None if 0 < v <= 1 else "must lie in (0, 1]"


def _at_least_one(v):
    return None if v >= 1 else "must be >= 1"


def _nonzero(v):
    return None if v != 0 else "must be non-zero"


def _choice(options):
    def check(v):
        return None if v in options else f"must be one of {', '.join(options)}"
    return check


def _u64(v):
    return None if 0 <= v < _U64 else "must be an unsigned 64-bit integer"


def _all(check):
    def inner(values):
        for v in values:
            msg = check(v)
            if msg:
                return f"every entry {msg}"
        return None if values else "must not be empty"
    return inner


# key -> (kind, check); kinds: float, int, bool, str, floats
_TOP = {
    "scenario": ("str", _choice(SCENARIOS)),
    "trials": ("int", _at_least_one),
    "seed": ("int", _u64),
    "output_path": ("str", None),
    "mode": ("str", _choice(MODES)),
    "workers": ("int", _at_least_one),
}
_REQUIRED_TOP = ("scenario", "trials", "seed")
_ENSEMBLE = {
    "atom_count": ("int", _at_least_one),
    "initial_contrast": ("float", _unit_interval),
    "coherence_time": ("float", _positive),
}
_CAVITY = {
    "coupling_g_hz": ("float", _positive),
    "detuning_dc_hz": ("float", _nonzero),
    "probe_photons": ("float", _non_negative),
    "imprecision_coeff": ("float", _non_negative),
    "scatter_coeff": ("float", _non_negative),
    "backaction_excess": ("float", lambda v: None if v >= 1 else "must be >= 1"),
    "inhomogeneous_shift_1d": ("float", _non_negative),
    "inhomogeneous_shift_2d": ("float", _non_negative),
    "echo_suppression_1d": ("float", _non_negative),
    "echo_suppression_2d": ("float", _non_negative),
    "probe_duration": ("float", _positive),
}
_LATTICE = {
    "dimensionality": ("str", _choice(("1D", "2D"))),
    "movable_depth": ("float", _positive),
    "transverse_depth": ("float", _positive),
    "temperature": ("float", _positive),
}
_NOISE = {
    "lo_white_fm": ("float", _non_negative),
    "lo_flicker_floor": ("float", _non_negative),
    "lo_uniform_phase": ("bool", None),
    "drift_rate": ("float", _non_negative),
    "static_offset": ("float", None),
    "technical_jz_noise": ("float", _non_negative),
    "nu0": ("float", _positive),
}
_SEQUENCE = {
    "T": ("float", _positive),
    "pre_photons": ("float", _non_negative),
    "final_photons": ("float", _positive),
    "ramsey_roundtrips": ("int", _non_negative),
    "post_roundtrips": ("int", _non_negative),
    "ramsey_phase_noise": ("float", _non_negative),
    "pulse_fidelity": ("float", _unit_interval),
    "pi_fidelity": ("float", _unit_interval),
    "cycle_time": ("float", _positive),
    "roundtrip_factor": ("float", _unit_interval),
    "transport_duration": ("float", _positive),
    "program_file": ("str", None),
}
_SWEEP = {"photons": ("floats", _all(_positive)), "trials": ("int", _at_least_one)}
_DECAY = {
    "dark_times": ("floats", _all(_non_negative)),
    "trials": ("int", _at_least_one),
    "differential_phase": ("float", None),
}
_TRANSPORT = {
    "initial_contrast": ("float", _unit_interval),
    "max_roundtrips": ("int", _non_negative),
    "dark_time": ("float", _positive),
}
_ANALYZE = {
    "input": ("str", None),
    "cycle_time": ("float", _positive),
    "remove_drift": ("bool", None),
}
_SECTIONS = {
    "cavity": _CAVITY, "lattice": _LATTICE, "noise": _NOISE, "sequence": _SEQUENCE,
    "photon_sweep": _SWEEP, "contrast_decay": _DECAY, "transport_decay": _TRANSPORT,
    "analyze": _ANALYZE,
}


def _coerce(kind: str, value: Any):
    """Converted value, or ``None`` with an error message."""
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None, "must be a number"
        if not math.isfinite(value):
            return None, "must be finite"
        return float(value), None
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return None, "must be an integer"
        return value, None
    if kind == "bool":
        return (value, None) if isinstance(value, bool) else (None, "must be true or false")
    if kind == "str":
        return (value, None) if isinstance(value, str) else (None, "must be a string")
    if kind == "floats":
        if not isinstance(value, list):
            return None, "must be a list of numbers"
        out = []
        for v in value:
            c, err = _coerce("float", v)
            if err:
                return None, f"every entry {err}"
            out.append(c)
        return tuple(out), None
    raise AssertionError(kind)


def _read_table(table: dict, schema: dict, path: str, errors: list[str],
                skip: tuple[str, ...] = ()) -> dict:
    out = {}
    for key, value in table.items():
        where = f"{path}.{key}" if path else key
        if key in skip:
            continue
        if key not in schema:
            errors.append(f"{where}: unknown field")
            continue
        kind, check = schema[key]
        converted, err = _coerce(kind, value)
        if err is None and check is not None:
            err = check(converted)
        if err:
            errors.append(f"{where}: {err}")
        else:
            out[key] = converted
    return out


def _section(raw: dict, name: str, errors: list[str]) -> dict:
    table = raw.get(name, {})
    if not isinstance(table, dict):
        errors.append(f"{name}: must be a table")
        return {}
    return table


def _build(cls, kwargs: dict, path: str, errors: list[str]):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def validate_config(text: str) -> tuple[ScenarioConfig | None, list[str]]:
    """Parse and validate a TOML scenario description.

    Returns ``(config, [])`` on success and ``(None, errors)`` otherwise; no
    exception escapes for malformed input.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        return None, [f"<file>: not valid TOML ({exc})"]
    errors: list[str] = []
    for key in _REQUIRED_TOP:
        if key not in raw:
            errors.append(f"{key}: required field is missing")
    top = _read_table({k: v for k, v in raw.items() if not isinstance(v, dict)}, _TOP, "", errors)
    unknown_sections = [k for k, v in raw.items()
                        if isinstance(v, dict) and k not in _SECTIONS and k != "ensembles"]
    errors.extend(f"{k}: unknown section" for k in unknown_sections)

    # ensembles: shared keys plus optional [ensembles.A] / [ensembles.B] overrides
    ens_raw = _section(raw, "ensembles", errors)
    shared = _read_table(ens_raw, {**_ENSEMBLE, "contrast_is_readout": ("bool", None)},
                         "ensembles", errors, skip=("A", "B"))
    readout = shared.pop("contrast_is_readout", True)
    ensembles = []
    for label in ("A", "B"):
        override = ens_raw.get(label, {})
        if not isinstance(override, dict):
            errors.append(f"ensembles.{label}: must be a table")
            override = {}
        own = _read_table(override, _ENSEMBLE, f"ensembles.{label}", errors)
        kw = {"atom_count": 30000, "initial_contrast": 0.82, "coherence_time": 4.5,
              **shared, **own, "label": label}
        ensembles.append(_build(EnsembleConfig, kw, f"ensembles.{label}", errors))

    sections = {name: _read_table(_section(raw, name, errors), schema, name, errors)
                for name, schema in _SECTIONS.items()}

    cav = dict(sections["cavity"])
    if "coupling_g_hz" in cav:
        cav["coupling_g"] = TWO_PI * cav.pop("coupling_g_hz")
    if "detuning_dc_hz" in cav:
        cav["detuning_dc"] = TWO_PI * cav.pop("detuning_dc_hz")
    cavity = _build(CavityParams, cav, "cavity", errors)
    lattice = _build(LatticeConfig, sections["lattice"], "lattice", errors)
    noise = _build(NoiseConfig, sections["noise"], "noise", errors)
    sequence = _build(SequenceParams, sections["sequence"], "sequence", errors)
    sweep = _build(PhotonSweepParams, sections["photon_sweep"], "photon_sweep", errors)
    decay = _build(ContrastDecayParams, sections["contrast_decay"], "contrast_decay", errors)
    transport = _build(TransportDecayParams, sections["transport_decay"], "transport_decay", errors)
    analyze = _build(AnalyzeParams, sections["analyze"], "analyze", errors)

    if sequence is not None:
        window = 2 * sequence.ramsey_roundtrips * sequence.transport_duration
        if window > sequence.T:
            errors.append("sequence.ramsey_roundtrips: transports do not fit into sequence.T")
    if transport is not None and "transport_duration" not in sections["sequence"]:
        if 2 * transport.max_roundtrips * TRANSPORT_DURATION > transport.dark_time:
            errors.append("transport_decay.dark_time: too short for max_roundtrips transports")
    if errors:
        return None, errors
    config = ScenarioConfig(
        scenario=top["scenario"], trials=top["trials"], seed=top["seed"],
        output_path=top.get("output_path", "results"), mode=top.get("mode", "both"),
        workers=top.get("workers", 1), ensembles=tuple(ensembles), contrast_is_readout=readout,
        cavity=cavity, lattice=lattice, noise=noise, sequence=sequence, photon_sweep=sweep,
        contrast_decay=decay, transport_decay=transport, analyze=analyze)
    return config, []


def load_config(path) -> ScenarioConfig:
    """Read and validate a config file; raises :class:`ConfigError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path} ({exc.strerror})"]) from None
    config, errors = validate_config(text)
    if errors:
        raise ConfigError(errors)
    return config


def default_config_path() -> Path:
    """Config used when none is given: ``$SQZCLOCK_CONFIG_DIR/default.toml`` if it
    exists, otherwise the copy shipped with the package."""
    env = os.environ.get(CONFIG_DIR_ENV)
    if env:
        candidate = Path(env) / DEFAULT_CONFIG_NAME
        if candidate.is_file():
            return candidate
    return Path(str(resources.files("sqzclock") / "data" / DEFAULT_CONFIG_NAME))


def default_config_text() -> str:
    return (resources.files("sqzclock") / "data" / DEFAULT_CONFIG_NAME).read_text()


def with_overrides(config: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Copy with top-level fields replaced; ``None`` values are ignored.

    Overriding ``trials`` also clears per-scenario trial counts.
    """
    kw = {k: v for k, v in overrides.items() if v is not None}
    config = replace(config, **kw)
    if "trials" in kw:
        config = replace(config,
                         photon_sweep=replace(config.photon_sweep, trials=None),
                         contrast_decay=replace(config.contrast_decay, trials=None))
    return config


