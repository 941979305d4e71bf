import json
import subprocess
import sys

import numpy as np
import pytest

from sqzclock import io
from sqzclock.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

SMALL = ["--trials", "40", "--seed", "4"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('scenario = "clock-comparison"\ntrials = 0\nseed = 1\n')
    code, _, err = run(["simulate", "clock-comparison", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG and "trials" in err


def test_usage_errors_exit_2(capsys):
    assert run(["simulate", "warp-drive"], capsys)[0] == EXIT_CONFIG
    assert run(["simulate", "clock-comparison", "--trials", "0"], capsys)[0] == EXIT_CONFIG
    assert run(["analyze"], capsys)[0] == EXIT_CONFIG


def test_missing_config_file_exits_2(tmp_path, capsys):
    code, _, err = run(["simulate", "transport-decay", "--config", str(tmp_path / "none.toml")], capsys)
    assert code == EXIT_CONFIG and "cannot read" in err


def test_runtime_failures_exit_3(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(["simulate", "transport-decay", "--out", str(blocker / "sub")], capsys)
    assert code == EXIT_RUNTIME and err.startswith("error:")
    code, _, _ = run(["analyze", str(tmp_path / "absent.csv"), "--out", str(tmp_path)], capsys)
    assert code == EXIT_RUNTIME


def test_simulate_is_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("a", "b"):
        code, stdout, _ = run(["simulate", "clock-comparison", *SMALL, "--mode", "both",
                               "--out", str(tmp_path / name)], capsys)
        assert code == EXIT_OK
        outputs.append(stdout)
    assert outputs[0] == outputs[1]
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"shots_css.csv", "shots_sss.csv", "frequency_sss.csv", "allan_css.csv",
            "summary.json"} <= set(files)
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    summary = json.loads(outputs[0])
    assert summary["seed"] == 4 and summary["trials"] == 40
    assert summary["comparison"]["variance_reduction_db"] > 0


def test_worker_count_does_not_change_results(tmp_path, capsys):
    for name, workers in (("one", "1"), ("four", "4")):
        assert run(["simulate", "clock-comparison", *SMALL, "--mode", "sss", "--workers", workers,
                    "--out", str(tmp_path / name)], capsys)[0] == EXIT_OK
    assert (tmp_path / "one" / "shots_sss.csv").read_bytes() == \
        (tmp_path / "four" / "shots_sss.csv").read_bytes()


def test_analyze_synthetic_white_fm(tmp_path, capsys):
    sigma, cycle, n = 1e-16, 3.8, 4000
    y = np.random.default_rng(0).normal(0.0, sigma, n)
    io.write_series(tmp_path / "y.csv", np.arange(n) * cycle, y)
    code, stdout, _ = run(["analyze", str(tmp_path / "y.csv"), "--out", str(tmp_path / "res")], capsys)
    assert code == EXIT_OK
    summary = json.loads(stdout)
    assert summary["cycle_time"] == cycle and summary["input_kind"] == "series"
    assert summary["fitted_coefficient"] == pytest.approx(sigma * np.sqrt(cycle), rel=0.05)
    table = io.read_allan(tmp_path / "res" / "allan.csv")
    assert table["tau_s"][0] == cycle


def test_emitted_tables_reingest(tmp_path, capsys):
    assert run(["simulate", "clock-comparison", *SMALL, "--mode", "sss", "--out", str(tmp_path)],
               capsys)[0] == EXIT_OK
    sim = json.loads((tmp_path / "summary.json").read_text())["sss"]["fitted_coefficient"]
    for name, kind in (("frequency_sss.csv", "series"), ("shots_sss.csv", "shots")):
        code, stdout, _ = run(["analyze", str(tmp_path / name), "--out", str(tmp_path / kind)], capsys)
        assert code == EXIT_OK
        summary = json.loads(stdout)
        assert summary["input_kind"] == kind
        assert summary["fitted_coefficient"] == pytest.approx(sim, rel=1e-9)


def test_keep_drift_and_cycle_time_flags(tmp_path, capsys):
    n = 200
    t = np.arange(n) * 2.0
    io.write_series(tmp_path / "d.csv", t, 1e-18 * t)
    _, out, _ = run(["analyze", str(tmp_path / "d.csv"), "--out", str(tmp_path / "r1")], capsys)
    assert json.loads(out)["fitted_coefficient"] == pytest.approx(0.0, abs=1e-30)
    _, out, _ = run(["analyze", str(tmp_path / "d.csv"), "--keep-drift", "--cycle-time", "5",
                     "--out", str(tmp_path / "r2")], capsys)
    summary = json.loads(out)
    assert summary["fitted_coefficient"] > 0 and summary["cycle_time"] == 5.0
    assert run(["analyze", str(tmp_path / "d.csv"), "--cycle-time", "-1"], capsys)[0] == EXIT_CONFIG


@pytest.mark.parametrize("scenario", ["transport-decay", "contrast-decay", "photon-sweep"])
def test_other_scenarios_run(tmp_path, capsys, scenario):
    code, stdout, _ = run(["simulate", scenario, "--trials", "30", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert json.loads(stdout)["scenario"] == scenario


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sqzclock", "simulate", "transport-decay",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["final_contrast"] == pytest.approx(0.84, rel=1e-12)
