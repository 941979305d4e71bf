"""Scenario orchestration: run a configured experiment and write its artifacts.

Every scenario writes plain CSV tables plus a ``summary.json`` into the
output directory. Outputs depend only on the configuration (including its
seed), so repeated runs are byte-identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, io
from .calibration import predicted_coefficient, predicted_R, readout_referenced
from .config import ScenarioConfig
from .sequence import (Pulse, QndEcho, clock_program, program_from_toml, ramsey_contrast_curve,
                       ramsey_program, run_shot, run_trials, transport_decay)

FULL_RUN_DURATION = 43 * 60.0  # s, length of the full comparison run


# --- building blocks ---------------------------------------------------------

def sss_program(config: ScenarioConfig):
    seq = config.sequence
    if seq.program_file:
        return program_from_toml(Path(seq.program_file).read_text())
    return clock_program(seq.T, seq.pre_photons, seq.final_photons,
                         ramsey_phase_noise=seq.ramsey_phase_noise,
                         pulse_fidelity=seq.pulse_fidelity, pi_fidelity=seq.pi_fidelity,
                         ramsey_roundtrips=seq.ramsey_roundtrips,
                         post_roundtrips=seq.post_roundtrips,
                         probe_duration=config.cavity.probe_duration,
                         transport_duration=seq.transport_duration)


def css_variant(program):
    """Same program with dark Pre blocks (echo pulses and timing kept)."""
    return [replace(s, photons=0.0) if isinstance(s, QndEcho) and s.role == "pre" else s
            for s in program]


def benchmark_variant(program):
    """Same program with noiseless clock rotations."""
    return [replace(s, phase_noise=0.0) if isinstance(s, Pulse) else s for s in program]


def with_pre_photons(program, photons: float):
    return [replace(s, photons=photons) if isinstance(s, QndEcho) and s.role == "pre" else s
            for s in program]


def resolved_ensembles(config: ScenarioConfig, program=None):
    """Ensembles with preparation contrasts; see ``contrast_is_readout``."""
    if not config.contrast_is_readout:
        return config.ensembles
    program = css_variant(program if program is not None else sss_program(config))
    return readout_referenced(config.ensembles, program, config.cavity, config.lattice,
                              config.sequence.roundtrip_factor)


def _quiet(noise):
    return replace(noise, drift_rate=0.0, static_offset=0.0)


def _run(config: ScenarioConfig, program, ensembles, noise, trials: int):
    return run_trials(program, ensembles, config.cavity, config.lattice, noise, seed=config.seed,
                      trials=trials, workers=config.workers,
                      cycle_time=config.sequence.cycle_time,
                      roundtrip_factor=config.sequence.roundtrip_factor)


def _atoms(config):
    return config.ensembles[0].atom_count, config.ensembles[1].atom_count


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _readout_contrast(program, ensembles, config) -> float:
    rec = run_shot(program, ensembles, config.cavity, config.lattice, _quiet(replace(
        config.noise, lo_white_fm=0.0, lo_flicker_floor=0.0)), np.random.default_rng(0),
        roundtrip_factor=config.sequence.roundtrip_factor)
    return 0.5 * (rec.contrast_A + rec.contrast_B)


def _report_dict(report: analysis.SqueezingReport) -> dict:
    return {**report.as_dict(), "display": report.display()}


# --- scenarios ---------------------------------------------------------------

def clock_comparison(config: ScenarioConfig, out: Path) -> dict:
    seq, noise = config.sequence, config.noise
    n_a, n_b = _atoms(config)
    sss = sss_program(config)
    css = css_variant(sss)
    ens = resolved_ensembles(config, sss)
    c_i = _readout_contrast(css, ens, config)
    modes = ("css", "sss") if config.mode == "both" else (config.mode,)
    summary: dict = {
        "scenario": "clock-comparison", "seed": config.seed, "trials": config.trials,
        "mode": config.mode,
        "parameters": {
            "atom_count": [n_a, n_b], "readout_contrast_css": c_i, "T": seq.T,
            "cycle_time": seq.cycle_time, "nu0": noise.nu0, "pre_photons": seq.pre_photons,
            "final_photons": seq.final_photons, "drift_rate": noise.drift_rate,
            "lo_white_fm": noise.lo_white_fm,
        },
        "qpn_closed_form": analysis.qpn_instability(0.5 * (n_a + n_b), c_i, seq.T, seq.cycle_time,
                                                    noise.nu0),
    }
    for mode in modes:
        program = css if mode == "css" else sss
        records = _run(config, program, ens, noise, config.trials)
        y = analysis.frequency_series(records, n_a, n_b, seq.T, noise.nu0)
        times = np.array([r.timestamp for r in records])
        y_used = analysis.remove_linear_drift(y, times) if config.analyze.remove_drift else y
        allan = analysis.allan_deviation(y_used, seq.cycle_time)
        io.write_shots(out / f"shots_{mode}.csv", records)
        io.write_series(out / f"frequency_{mode}.csv", times, y)
        io.write_allan(out / f"allan_{mode}.csv", allan)
        contrast = float(np.mean([0.5 * (r.contrast_A + r.contrast_B) for r in records]))
        R_clock = analysis.spin_noise_reduction(records, n_a, n_b)
        entry = {
            "fitted_coefficient": allan.fitted_coefficient,
            "predicted_coefficient": predicted_coefficient(
                program, ens, config.cavity, config.lattice, seq.T, seq.cycle_time, noise.nu0,
                seq.roundtrip_factor),
            "readout_contrast": contrast,
            "R_clock": R_clock,
            "fitted_drift_rate_hz_per_s": analysis.linear_drift_rate(y, times) * noise.nu0,
            "full_run": {
                "tau_s": FULL_RUN_DURATION,
                "differential": analysis.extrapolate(allan.fitted_coefficient, FULL_RUN_DURATION),
                "single_clock": analysis.extrapolate(allan.fitted_coefficient,
                                                     FULL_RUN_DURATION) / math.sqrt(2.0),
            },
        }
        # R and the squeezing report come from a drift-free run with noiseless rotations
        bench_program = benchmark_variant(program)
        bench = _run(config, bench_program, ens, _quiet(noise), config.trials)
        io.write_shots(out / f"shots_benchmark_{mode}.csv", bench)
        report = analysis.squeezing_report(bench, n_a, n_b, c_i)
        entry["benchmark"] = {
            "R": report.R_linear,
            "R_stderr": analysis.variance_ratio_stderr(report.R_linear, len(bench)),
            "predicted_R": predicted_R(bench_program, ens, config.cavity, config.lattice,
                                       seq.roundtrip_factor),
        }
        entry["squeezing_report"] = _report_dict(report)
        summary[mode] = entry
    if len(modes) == 2:
        a_css = summary["css"]["fitted_coefficient"]
        a_sss = summary["sss"]["fitted_coefficient"]
        summary["comparison"] = {
            "variance_reduction_db": 20.0 * math.log10(a_css / a_sss),
            "gain_beyond_sql": analysis.gain_beyond_sql(a_css, a_sss, c_i),
        }
    _write_json(out / "summary.json", summary)
    return summary


def photon_sweep(config: ScenarioConfig, out: Path) -> dict:
    seq = config.sequence
    n_a, n_b = _atoms(config)
    base = benchmark_variant(sss_program(config))
    ens = resolved_ensembles(config, base)
    c_i = _readout_contrast(css_variant(base), ens, config)
    trials = config.photon_sweep.trials or config.trials
    noise = _quiet(config.noise)
    rows = []
    for photons in config.photon_sweep.photons:
        program = with_pre_photons(base, photons)
        # the same seed at every point keeps the curve smooth (common random numbers)
        records = _run(config, program, ens, noise, trials)
        R = analysis.spin_noise_reduction(records, n_a, n_b)
        c_f = float(np.mean([0.5 * (r.contrast_A + r.contrast_B) for r in records]))
        c2 = c_f * c_f / c_i
        R_pred = predicted_R(program, ens, config.cavity, config.lattice, seq.roundtrip_factor)
        rows.append((photons, R, analysis.db(R), c2, analysis.db(c2), analysis.db(R / c2),
                     analysis.db(R_pred / c2)))
    io.write_csv(out / "photon_sweep.csv",
                 ("photons", "R_linear", "R_dB", "C2", "C2_dB", "xi2_dB", "xi2_dB_predicted"), rows)
    xi = [r[5] for r in rows]
    best = int(np.argmin(xi))
    summary = {
        "scenario": "photon-sweep", "seed": config.seed, "trials_per_point": trials,
        "readout_contrast_css": c_i,
        "optimum": {"photons": rows[best][0], "R_dB": rows[best][2], "xi2_dB": rows[best][5],
                    "index": best, "interior": 0 < best < len(rows) - 1},
    }
    _write_json(out / "summary.json", summary)
    return summary


def contrast_decay(config: ScenarioConfig, out: Path) -> dict:
    cd = config.contrast_decay
    ens_a = config.ensembles[0]
    trials = cd.trials or config.trials
    rows = ramsey_contrast_curve(cd.dark_times, ens_a.coherence_time,
                                 np.random.default_rng(config.seed), trials,
                                 atom_count=ens_a.atom_count,
                                 initial_contrast=ens_a.initial_contrast,
                                 differential_phase=cd.differential_phase,
                                 cavity=config.cavity, lattice=config.lattice)
    io.write_csv(out / "contrast_decay.csv", ("dark_time_s", "contrast"), rows)
    t, c = np.array(rows).T
    c0, tau = analysis.fit_exponential_decay(t, c)
    summary = {"scenario": "contrast-decay", "seed": config.seed, "trials_per_point": trials,
               "configured_coherence_time": ens_a.coherence_time,
               "fitted_coherence_time": tau, "fitted_initial_contrast": c0}
    _write_json(out / "summary.json", summary)
    return summary


def transport_decay_scan(config: ScenarioConfig, out: Path) -> dict:
    td, seq = config.transport_decay, config.sequence
    factor = seq.roundtrip_factor
    ens = tuple(replace(e, initial_contrast=1.0) for e in config.ensembles)
    quiet = replace(_quiet(config.noise), lo_white_fm=0.0, lo_flicker_floor=0.0)

    def simulated(n):
        program = ramsey_program(td.dark_time, n, seq.transport_duration)
        rec = run_shot(program, ens, config.cavity, config.lattice, quiet,
                       np.random.default_rng(0), roundtrip_factor=factor)
        return rec.contrast_A

    reference = simulated(0)
    rows = [(n, transport_decay(td.initial_contrast, n, factor),
             td.initial_contrast * simulated(n) / reference)
            for n in range(td.max_roundtrips + 1)]
    io.write_csv(out / "transport_decay.csv",
                 ("roundtrips", "contrast", "contrast_simulated"), rows)
    summary = {"scenario": "transport-decay", "per_roundtrip_factor": factor,
               "initial_contrast": td.initial_contrast, "roundtrips": td.max_roundtrips,
               "final_contrast": rows[-1][1], "final_contrast_simulated": rows[-1][2]}
    _write_json(out / "summary.json", summary)
    return summary


def analyze_file(config: ScenarioConfig, out: Path, input_path=None) -> dict:
    """Allan analysis of an external frequency series or shot table."""
    path = Path(input_path or config.analyze.input or "")
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    seq, noise = config.sequence, config.noise
    if io.is_shot_table(path):
        records = io.read_shots(path)
        n_a, n_b = _atoms(config)
        y = analysis.frequency_series(records, n_a, n_b, seq.T, noise.nu0)
        times = np.array([r.timestamp for r in records])
        kind = "shots"
    else:
        times, y = io.read_series(path)
        kind = "series"
    cycle = config.analyze.cycle_time
    if cycle is None:
        steps = np.diff(times)
        if steps.size and np.all(steps > 0) and np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            cycle = float(steps[0])
        else:
            cycle = seq.cycle_time
    y_used = analysis.remove_linear_drift(y, times) if config.analyze.remove_drift else y
    allan = analysis.allan_deviation(y_used, cycle)
    io.write_allan(out / "allan.csv", allan)
    summary = {"scenario": "analyze", "input_kind": kind, "n_samples": int(len(y)),
               "cycle_time": cycle, "drift_removed": config.analyze.remove_drift,
               "fitted_coefficient": allan.fitted_coefficient,
               "fitted_drift_per_s": analysis.linear_drift_rate(y, times)}
    _write_json(out / "summary.json", summary)
    return summary


_RUNNERS = {
    "clock-comparison": clock_comparison,
    "photon-sweep": photon_sweep,
    "contrast-decay": contrast_decay,
    "transport-decay": transport_decay_scan,
    "analyze": analyze_file,
}


def run_scenario(config: ScenarioConfig, out_dir=None, **kwargs) -> dict:
    """Run ``config.scenario`` and write its artifacts to ``out_dir``
    (default ``config.output_path``). Returns the summary dictionary."""
    if config.scenario not in _RUNNERS:
        raise ValueError(f"unknown scenario {config.scenario!r}")
    out = Path(out_dir if out_dir is not None else config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[config.scenario](config, out, **kwargs)
