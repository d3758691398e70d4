"""Config file handling: a single nested YAML document describes the scene,
the filter, and every noise/threshold parameter. Shipped defaults reproduce
the two-vehicle circular-road evaluation scenario."""

from __future__ import annotations

import copy

import numpy as np
import yaml

from .dynamics import SP, VA, VS, NoiseConfig, VehicleState
from .fusion import FusionParams
from .geometry import Environment, Plane
from .local_slam import ClutterModel
from .metrics import GospaParams
from .sim import RunConfig, Scenario, validate_scenario


class ConfigError(ValueError):
    """Config file is structurally or semantically invalid."""


def default_config():
    """Fully resolved default configuration (two vehicles, circular road)."""
    return {
        "scenario": {
            "bs_position": [0.0, 0.0, 40.0],
            "reflecting_surfaces": [
                {"normal": [1.0, 0.0, 0.0], "offset": 80.0},
                {"normal": [1.0, 0.0, 0.0], "offset": -80.0},
                {"normal": [0.0, 1.0, 0.0], "offset": 80.0},
                {"normal": [0.0, 1.0, 0.0], "offset": -80.0},
            ],
            "sp_xy": [[55.0, 55.0], [55.0, -55.0], [-55.0, 55.0], [-55.0, -55.0]],
            "sp_height_range": [0.0, 40.0],
            "fov_range_sp": 50.0,
            "fov_range_vs": 50.0,
            "detection_prob": 0.95,
            "gamma_d": 0.9,
            "min_range": 3.0,
            "vehicles": [
                {"position": [70.73, 0.0, 0.0], "heading": float(np.pi / 2),
                 "speed": 22.22, "turn_rate": float(np.pi / 10), "clock_bias": 300.0},
                {"position": [60.73, 0.0, 0.0], "heading": float(np.pi / 2),
                 "speed": 19.08, "turn_rate": float(np.pi / 10), "clock_bias": 300.0},
            ],
            "timestep": 0.5,
            "horizon": 40,
            "fusion_start": [5, 6],
            "fusion_period": 2,
        },
        "run": {
            "mode": "full",
            "particles": 300,
            "runs": 10,
            "seed": 1,
            "likelihood": "product",
            "survival_prob": 0.99,
            "birth_weight": 1.0e-4,
            "prune_threshold": 1.0e-6,
            "merge_threshold": 4.0,
            "max_components": 100,
            "extraction_thresholds": {VA: 0.5, SP: 0.5, VS: 0.5},
            "init_std": [0.3, 0.3, 0.0, 0.01, 0.0, 0.0, 0.3],
            "birth_velocity_var": [100.0, 100.0, 0.09],
            "birth_turn_rate_std": float(np.pi / 2),
        },
        "noise": {
            "vehicle_process_std": [0.15, 0.15, 0.0, 0.005, 0.0, 0.0, 0.1],
            "vs_process_std": [1.0, 1.0, 0.1, 3.0, 3.0, 0.1, 0.05],
            "measurement_std": [0.1, 0.01, 0.01, 0.01, 0.01],
            "dither_diag": [9.0, 9.0, 0.09, 5.0, 5.0, 0.09, 0.18],
        },
        "clutter": {"poisson_mean": 1.0, "toa_max": 400.0},
        "fusion": {
            "t_md_l": 20.0,
            "t_md_v": 20.0,
            "false_alarm_weight": 0.25,
            "prune_threshold": 0.1,
            "merge_threshold": 4.0,
            "max_components": 100,
            "matching": "greedy",
        },
        "gospa": {"cutoff": 20.0, "order": 2.0, "alpha": 2.0},
    }


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None):
    """Load a YAML config, merged over the shipped defaults."""
    resolved = default_config()
    if path is not None:
        with open(path) as fh:
            try:
                user = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(user) - set(resolved)
        if unknown:
            raise ConfigError(f"{path}: unknown top-level sections {sorted(unknown)}")
        resolved = _deep_merge(resolved, user)
    return resolved


def build(config):
    """Construct (Scenario, RunConfig) from a resolved config dict; problems
    are reported with their config key path."""
    problems = []

    def get(section, key, kind=None):
        try:
            value = config[section][key]
        except (KeyError, TypeError):
            problems.append(f"{section}.{key}: missing")
            return None
        return value

    sc = config.get("scenario", {})
    try:
        surfaces = [Plane(s["normal"], s["offset"]) for s in sc.get("reflecting_surfaces", [])]
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"scenario.reflecting_surfaces: {exc}")
        surfaces = []
    try:
        env = Environment(
            bs_position=sc["bs_position"],
            reflecting_surfaces=surfaces,
            fov_range_sp=sc["fov_range_sp"],
            fov_range_vs=sc["fov_range_vs"],
            detection_prob=sc["detection_prob"],
            gamma_d=sc["gamma_d"],
            min_range=sc["min_range"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"scenario: {exc}")
        raise ConfigError("; ".join(problems))
    try:
        vehicles = [
            VehicleState(v["position"], v["heading"], v["speed"],
                         v["turn_rate"], v["clock_bias"])
            for v in sc.get("vehicles", [])
        ]
    except (KeyError, TypeError) as exc:
        problems.append(f"scenario.vehicles: {exc}")
        vehicles = []
    scenario = Scenario(
        env=env,
        vehicles=vehicles,
        sp_xy=np.asarray(sc.get("sp_xy", []), dtype=float),
        sp_height_range=tuple(sc.get("sp_height_range", (0.0, 40.0))),
        dt=float(sc.get("timestep", 0.5)),
        horizon=int(sc.get("horizon", 40)),
        fusion_start=list(sc.get("fusion_start", [])),
        fusion_period=int(sc.get("fusion_period", 2)),
    )

    nz = config.get("noise", {})
    try:
        noise = NoiseConfig.from_stds(
            nz["vehicle_process_std"], nz["vs_process_std"],
            nz["measurement_std"], nz["dither_diag"])
    except (KeyError, TypeError) as exc:
        problems.append(f"noise: {exc}")
        noise = None

    rn = config.get("run", {})
    fz = config.get("fusion", {})
    cz = config.get("clutter", {})
    gz = config.get("gospa", {})
    if rn.get("mode") not in ("baseline", "cm1", "full"):
        problems.append(f"run.mode: expected baseline|cm1|full, got {rn.get('mode')!r}")
    if rn.get("likelihood") not in ("sum", "product"):
        problems.append(f"run.likelihood: expected sum|product, got {rn.get('likelihood')!r}")
    if fz.get("matching") not in ("greedy", "hungarian"):
        problems.append(f"fusion.matching: expected greedy|hungarian, got {fz.get('matching')!r}")

    run_config = None
    if not problems:
        try:
            run_config = RunConfig(
                mode=rn["mode"],
                particles=int(rn["particles"]),
                runs=int(rn["runs"]),
                seed=int(rn["seed"]),
                noise=noise,
                init_std=np.asarray(rn["init_std"], dtype=float),
                birth_weight=float(rn["birth_weight"]),
                survival_prob=float(rn["survival_prob"]),
                prune_threshold=float(rn["prune_threshold"]),
                merge_threshold=float(rn["merge_threshold"]),
                max_components=int(rn["max_components"]),
                extraction_thresholds={k: float(v)
                                       for k, v in rn["extraction_thresholds"].items()},
                likelihood=rn["likelihood"],
                birth_velocity_var=np.asarray(rn["birth_velocity_var"], dtype=float),
                birth_turn_rate_std=float(rn["birth_turn_rate_std"]),
                clutter=ClutterModel(float(cz["poisson_mean"]), float(cz["toa_max"])),
                fusion=FusionParams(
                    t_md_l=float(fz["t_md_l"]),
                    t_md_v=float(fz["t_md_v"]),
                    false_alarm_weight=float(fz["false_alarm_weight"]),
                    prune_threshold=float(fz["prune_threshold"]),
                    merge_threshold=float(fz["merge_threshold"]),
                    max_components=int(fz["max_components"]),
                    matching=fz["matching"],
                ),
                gospa=GospaParams(float(gz["cutoff"]), float(gz["order"]),
                                  float(gz["alpha"])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(str(exc))

    if problems:
        raise ConfigError("; ".join(problems))
    return scenario, run_config


def validate(config):
    """Full validation: construction plus scenario geometry; returns problems."""
    try:
        scenario, run_config = build(config)
    except ConfigError as exc:
        return [str(exc)]
    return validate_scenario(scenario, run_config.particles)


def dump_config(config, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config, fh, sort_keys=False, default_flow_style=None)
