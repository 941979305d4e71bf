"""Command-line entry point.

    sqzclock simulate clock-comparison|photon-sweep|contrast-decay|transport-decay
    sqzclock analyze <series.csv>

Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import (CONFIG_DIR_ENV, MODES, ConfigError, default_config_path, load_config,
                     with_overrides)
from .scenarios import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SIMULATIONS = ("clock-comparison", "photon-sweep", "contrast-decay", "transport-decay")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqzclock",
        description="Squeezed-clock comparison simulator and stability analysis.",
        epilog=f"Without --config, ${CONFIG_DIR_ENV}/default.toml or the bundled defaults are used.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario TOML file")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides output_path)")
    common.add_argument("--workers", type=_positive_int, help="worker threads for shot batches")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="run a simulation scenario")
    sim.add_argument("scenario", choices=SIMULATIONS)
    sim.add_argument("--trials", type=_positive_int, help="shots (per point for scans)")
    sim.add_argument("--mode", choices=MODES, help="clock-comparison modes to run")

    ana = sub.add_parser("analyze", parents=[common],
                         help="Allan analysis of a frequency-series or shot CSV")
    ana.add_argument("input", nargs="?", help="CSV with time_s,value columns or a shot table")
    ana.add_argument("--cycle-time", type=float, help="sampling interval in seconds")
    ana.add_argument("--keep-drift", action="store_true", help="do not remove a linear drift")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        config = load_config(args.config or default_config_path())
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    scenario = args.scenario if args.command == "simulate" else "analyze"
    config = with_overrides(config, scenario=scenario, seed=args.seed, workers=args.workers,
                            trials=getattr(args, "trials", None), mode=getattr(args, "mode", None))
    kwargs = {}
    if args.command == "analyze":
        analyze = config.analyze
        if args.cycle_time is not None:
            if not args.cycle_time > 0:
                print("config error: --cycle-time must be positive", file=sys.stderr)
                return EXIT_CONFIG
            analyze = replace(analyze, cycle_time=args.cycle_time)
        if args.keep_drift:
            analyze = replace(analyze, remove_drift=False)
        config = replace(config, analyze=analyze)
        if args.input is None and config.analyze.input is None:
            print("config error: analyze.input: no input file given", file=sys.stderr)
            return EXIT_CONFIG
        kwargs["input_path"] = args.input
    try:
        summary = run_scenario(config, args.out, **kwargs)
    except Exception as exc:  # noqa: BLE001 - any failure during the run maps to exit 3
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
