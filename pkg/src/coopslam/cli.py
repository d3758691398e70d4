"""Command-line front end.

Subcommands:
    run       execute one configured experiment
    ablate    sweep baseline / cm1 / full on the same scenario and seeds
    validate  check a config file and its scenario geometry

Outputs land in --out: metrics.csv (one row per step/run/map-type),
fusion_log.jsonl, and config_echo.yaml (re-running the echoed config with the
same seed reproduces metrics.csv byte for byte).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import config as config_mod
from .config import ConfigError
from .sim import ScenarioError, run_experiment

CSV_COLUMNS = ["step", "mode", "run", "map_type", "gospa", "gospa_loc",
               "gospa_miss", "gospa_false", "rmse_loc"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="coopslam",
        description="Cooperative mmWave PHD-SLAM simulation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True):
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config file (defaults merged underneath)")
        if with_mode:
            p.add_argument("--mode", choices=["baseline", "cm1", "full"], default=None)
        p.add_argument("--runs", type=int, default=None)
        p.add_argument("--particles", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("out"))

    common(sub.add_parser("run", help="run a single experiment"))
    common(sub.add_parser("ablate", help="run baseline, cm1 and full"), with_mode=False)
    v = sub.add_parser("validate", help="validate a config file")
    v.add_argument("--config", type=Path, default=None)
    return parser


def _resolve(args, with_mode=True):
    cfg = config_mod.load_config(args.config)
    if with_mode and args.mode is not None:
        cfg["run"]["mode"] = args.mode
    if args.runs is not None:
        cfg["run"]["runs"] = args.runs
    if args.particles is not None:
        cfg["run"]["particles"] = args.particles
    if args.seed is not None:
        cfg["run"]["seed"] = args.seed
    return cfg


def _write_outputs(out_dir: Path, cfg, artifact_list):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for artifacts in artifact_list:
            for row in artifacts.metric_rows():
                writer.writerow(row)
    with open(out_dir / "fusion_log.jsonl", "w") as fh:
        for artifacts in artifact_list:
            for rec in artifacts.fusion_log:
                fh.write(json.dumps({"mode": artifacts.mode, **rec}) + "\n")
    config_mod.dump_config(cfg, out_dir / "config_echo.yaml")


def _execute(cfg, modes, out_dir: Path):
    problems = config_mod.validate(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG

    artifact_list = []
    for mode in modes:
        mode_cfg = {**cfg, "run": {**cfg["run"], "mode": mode}}
        scenario, run_config = config_mod.build(mode_cfg)
        artifacts = run_experiment(run_config, scenario)
        artifacts.config_echo = mode_cfg
        artifact_list.append(artifacts)
        print(f"mode={mode}: {run_config.runs} runs, "
              f"{len(artifacts.failed_runs)} failed, "
              f"{artifacts.wallclock:.1f}s")
    _write_outputs(out_dir, cfg, artifact_list)
    print(f"wrote {out_dir / 'metrics.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = config_mod.load_config(args.config)
            problems = config_mod.validate(cfg)
            if problems:
                for p in problems:
                    print(f"config error: {p}", file=sys.stderr)
                return EXIT_CONFIG
            print("config OK")
            return EXIT_OK
        if args.command == "run":
            cfg = _resolve(args)
            return _execute(cfg, [cfg["run"]["mode"]], args.out)
        if args.command == "ablate":
            cfg = _resolve(args, with_mode=False)
            return _execute(cfg, ["baseline", "cm1", "full"], args.out)
    except (ConfigError, ScenarioError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
