"""Scenario generation and the Monte Carlo experiment driver: ground-truth
propagation, measurement synthesis with detection gating and Poisson clutter,
per-vehicle filtering, scheduled base-station fusion, and metric collection."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    BS,
    SP,
    VA,
    VS,
    MAP_TYPES,
    NoiseConfig,
    Target,
    VehicleState,
    step_vehicle,
    wrap_angle,
)
from .fusion import AccumulatedFov, BaseStation, FusionParams
from .geometry import Environment, measure, detection_probability, va_visible
from .local_slam import ClutterModel, FilterParams, LocalFilter
from .metrics import GospaParams, gospa

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Scenario fails validation."""


@dataclass
class Scenario:
    """Static scene plus vehicle initial states and the fusion schedule.

    SP heights are redrawn uniformly per Monte Carlo run from sp_height_range;
    every vehicle acts as a VS for every other vehicle.
    """

    env: Environment
    vehicles: list
    sp_xy: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    sp_height_range: tuple = (0.0, 40.0)
    dt: float = 0.5
    horizon: int = 40
    fusion_start: list = field(default_factory=list)   # per-vehicle first uplink step
    fusion_period: int = 2

    def __post_init__(self):
        self.sp_xy = np.atleast_2d(np.asarray(self.sp_xy, dtype=float)) \
            if len(self.sp_xy) else np.zeros((0, 2))

    def fusion_steps(self, vehicle_idx):
        if vehicle_idx >= len(self.fusion_start):
            return set()
        start = self.fusion_start[vehicle_idx]
        return set(range(start, self.horizon + 1, self.fusion_period))


@dataclass
class RunConfig:
    mode: str = "full"
    particles: int = 300
    runs: int = 10
    seed: int = 0
    noise: NoiseConfig = None
    init_std: np.ndarray = field(
        default_factory=lambda: np.array([0.3, 0.3, 0.0, 0.01, 0.0, 0.0, 0.3]))
    birth_weight: float = 1e-4
    survival_prob: float = 0.99
    prune_threshold: float = 1e-6
    merge_threshold: float = 4.0
    max_components: int = 100
    extraction_thresholds: dict = field(
        default_factory=lambda: {VA: 0.5, SP: 0.5, VS: 0.5})
    likelihood: str = "product"
    birth_velocity_var: np.ndarray = field(
        default_factory=lambda: np.array([100.0, 100.0, 0.09]))
    birth_turn_rate_std: float = np.pi / 2
    clutter: ClutterModel = field(default_factory=ClutterModel)
    fusion: FusionParams = field(default_factory=FusionParams)
    gospa: GospaParams = field(default_factory=GospaParams)

    def __post_init__(self):
        self.init_std = np.asarray(self.init_std, dtype=float)
        if self.noise is None:
            self.noise = default_noise()

    def filter_params(self):
        return FilterParams(
            mode=self.mode,
            particles=self.particles,
            birth_weight=self.birth_weight,
            survival_prob=self.survival_prob,
            prune_threshold=self.prune_threshold,
            merge_threshold=self.merge_threshold,
            max_components=self.max_components,
            extraction_thresholds=dict(self.extraction_thresholds),
            likelihood=self.likelihood,
            birth_velocity_var=self.birth_velocity_var,
            birth_turn_rate_std=self.birth_turn_rate_std,
            clutter=self.clutter,
        )


def default_noise():
    """Shipped noise defaults: the VS process/dither values from the evaluated
    scenario; vehicle process and measurement noise chosen to match the
    known-speed/turn-rate inertial assumption and a mmWave channel estimator."""
    return NoiseConfig.from_stds(
        vehicle_std=[0.15, 0.15, 0.0, 0.005, 0.0, 0.0, 0.1],
        vs_std=[1.0, 1.0, 0.1, 3.0, 3.0, 0.1, 0.05],
        measurement_std=[0.1, 0.01, 0.01, 0.01, 0.01],
        dither_diag=[9.0, 9.0, 0.09, 5.0, 5.0, 0.09, 0.18],
    )


@dataclass
class Truth:
    """Noiseless ground truth for one Monte Carlo run."""

    env: Environment                 # includes this run's sampled SP heights
    vehicle_states: np.ndarray       # (n_vehicles, horizon+1, 7)
    scenario: Scenario

    def vehicle(self, idx, step) -> VehicleState:
        return VehicleState.from_vector(self.vehicle_states[idx, step])

    def targets(self, step, receiver_idx):
        """Target set seen by one receiver: BS, VAs (with their generating
        surface for visibility checks), SPs, and the other vehicles as VSs."""
        out = [(Target(self.env.bs_position.copy(), type=BS), None)]
        for surface, va in zip(self.env.reflecting_surfaces, self.env.va_positions()):
            out.append((Target(va, type=VA), surface))
        for sp in self.env.sp_positions:
            out.append((Target(sp.copy(), type=SP), None))
        for other in range(self.vehicle_states.shape[0]):
            if other == receiver_idx:
                continue
            s = self.vehicle_states[other, step]
            vel = s[4] * np.array([np.cos(s[3]), np.sin(s[3]), 0.0])
            out.append((Target(s[:3].copy(), vel, s[5], VS), None))
        return out

    def landmark_truth(self, step, receiver_idx):
        """Per-type true positions for map evaluation (BS is known, excluded)."""
        vs = np.array([self.vehicle_states[o, step, :3]
                       for o in range(self.vehicle_states.shape[0]) if o != receiver_idx])
        return {
            VA: self.env.va_positions(),
            SP: self.env.sp_positions.copy(),
            VS: vs if len(vs) else np.zeros((0, 3)),
        }


def validate_scenario(scenario: Scenario, particles=None):
    """Geometry and schedule checks; returns a list of problem descriptions."""
    problems = []
    if scenario.horizon < 1:
        problems.append("scenario.horizon: must be >= 1")
    if scenario.dt <= 0:
        problems.append("scenario.timestep: must be positive")
    if not scenario.vehicles:
        problems.append("scenario.vehicles: at least one vehicle required")
    if scenario.fusion_period < 1:
        problems.append("scenario.fusion_period: must be >= 1")
    for n, start in enumerate(scenario.fusion_start):
        if not 1 <= start <= scenario.horizon:
            problems.append(
                f"scenario.fusion_start[{n}]: step {start} outside horizon 1..{scenario.horizon}")
    if particles is not None and particles < 1:
        problems.append("run.particles: must be >= 1")

    # Noiseless trajectories must stay on one side of every reflecting surface.
    for n, init in enumerate(scenario.vehicles):
        state = init
        track = [state.position.copy()]
        for _ in range(scenario.horizon):
            state = step_vehicle(state, scenario.dt)
            track.append(state.position.copy())
        track = np.array(track)
        for s_idx, surface in enumerate(scenario.env.reflecting_surfaces):
            side = surface.signed_distance(track)
            if side.max() > 0 and side.min() < 0:
                problems.append(
                    f"scenario.vehicles[{n}]: trajectory crosses reflecting surface "
                    f"#{s_idx} (normal {np.round(surface.normal, 3).tolist()}, "
                    f"offset {surface.offset})")
    return problems


def generate_truth(scenario: Scenario, rng) -> Truth:
    """Noiseless vehicle trajectories plus a per-run environment with SP
    heights drawn from the configured range."""
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError("; ".join(problems))

    if len(scenario.sp_xy):
        lo, hi = scenario.sp_height_range
        heights = rng.uniform(lo, hi, len(scenario.sp_xy))
        sp_positions = np.column_stack([scenario.sp_xy, heights])
    else:
        sp_positions = np.zeros((0, 3))
    env = Environment(
        bs_position=scenario.env.bs_position.copy(),
        reflecting_surfaces=list(scenario.env.reflecting_surfaces),
        sp_positions=sp_positions,
        fov_range_sp=scenario.env.fov_range_sp,
        fov_range_vs=scenario.env.fov_range_vs,
        detection_prob=scenario.env.detection_prob,
        gamma_d=scenario.env.gamma_d,
        min_range=scenario.env.min_range,
    )

    n_v = len(scenario.vehicles)
    states = np.zeros((n_v, scenario.horizon + 1, 7))
    for n, init in enumerate(scenario.vehicles):
        states[n, 0] = init.as_vector()
        s = init
        for k in range(1, scenario.horizon + 1):
            s = step_vehicle(s, scenario.dt)
            states[n, k] = s.as_vector()
    return Truth(env, states, scenario)


def generate_measurements(vehicle: VehicleState, targets, env: Environment,
                          noise: NoiseConfig, clutter: ClutterModel, rng):
    """One scan: target detections with additive noise plus Poisson clutter,
    order-shuffled so nothing identifies the origin of a measurement."""
    sqrt_r = np.linalg.cholesky(noise.measurement_cov)
    rows = []
    for target, surface in targets:
        p_d = detection_probability(vehicle, target, env)
        if target.type == VA and surface is not None:
            if not va_visible(target.position, vehicle.position, surface):
                p_d = 0.0
        if p_d > 0 and rng.uniform() < p_d:
            z = measure(vehicle, target, env).as_array()
            z = z + sqrt_r @ rng.standard_normal(5)
            rows.append(z)
    count = rng.poisson(clutter.poisson_mean)
    if count:
        rows.extend(clutter.sample(rng, count))
    if not rows:
        return np.zeros((0, 5))
    Z = np.stack(rows)
    Z[:, 0] = np.maximum(Z[:, 0], 0.0)
    Z[:, [1, 3]] = wrap_angle(Z[:, [1, 3]])
    Z[:, [2, 4]] = np.clip(Z[:, [2, 4]], -np.pi / 2, np.pi / 2)
    return Z[rng.permutation(len(Z))]


@dataclass
class RunArtifacts:
    """Everything one experiment produces, ready for CSV/JSONL emission."""

    mode: str
    seed: int
    horizon: int
    gospa_params: GospaParams
    gospa: dict            # type -> (runs, K, 4) [distance, loc, missed, false]
    gospa_by_vehicle: dict  # type -> (runs, K, n_vehicles, 4), same layout per vehicle
    loc_err: np.ndarray    # (runs, K) per-run per-step vehicle location RMS error
    rmse: np.ndarray       # (K,) location RMSE across completed runs
    fusion_log: list
    failed_runs: list
    wallclock: float
    config_echo: dict = field(default_factory=dict)

    def completed_runs(self):
        return [r for r in range(self.loc_err.shape[0]) if r not in self.failed_runs]

    def mean_gospa(self, ttype):
        """(K, 4) mean over completed runs."""
        rows = self.gospa[ttype][self.completed_runs()]
        return rows.mean(axis=0)

    def mean_gospa_vehicle(self, ttype, vehicle):
        """(K, 4) mean over completed runs for one vehicle's map estimates."""
        rows = self.gospa_by_vehicle[ttype][self.completed_runs(), :, vehicle]
        return rows.mean(axis=0)

    def metric_rows(self):
        """Rows for the metrics CSV: one per (step, run, map_type)."""
        rows = []
        for r in self.completed_runs():
            for k in range(self.horizon):
                for ttype in MAP_TYPES:
                    g = self.gospa[ttype][r, k]
                    rows.append({
                        "step": k + 1,
                        "mode": self.mode,
                        "run": r,
                        "map_type": ttype,
                        "gospa": g[0],
                        "gospa_loc": g[1],
                        "gospa_miss": g[2],
                        "gospa_false": g[3],
                        "rmse_loc": self.loc_err[r, k],
                    })
        return rows


def run_experiment(config: RunConfig, scenario: Scenario) -> RunArtifacts:
    """Run the full Monte Carlo experiment for one mode.

    Deterministic for a given seed: the simulation stream (SP heights,
    detections, noise, clutter) is independent of the filter streams, so
    matched-seed runs of different modes see identical measurements.
    """
    t0 = time.perf_counter()
    problems = validate_scenario(scenario, config.particles)
    if problems:
        raise ScenarioError("; ".join(problems))

    k_n = scenario.horizon
    n_v = len(scenario.vehicles)
    gospa_out = {t: np.full((config.runs, k_n, 4), np.nan) for t in MAP_TYPES}
    gospa_veh = {t: np.full((config.runs, k_n, n_v, 4), np.nan) for t in MAP_TYPES}
    loc_err = np.full((config.runs, k_n), np.nan)
    fusion_log = []
    failed = []

    run_seeds = np.random.SeedSequence(config.seed).spawn(config.runs)
    for r in range(config.runs):
        try:
            _single_run(config, scenario, run_seeds[r], r,
                        gospa_out, gospa_veh, loc_err, fusion_log)
        except Exception:
            logger.exception("Monte Carlo run %d failed; excluding it", r)
            failed.append(r)

    completed = [r for r in range(config.runs) if r not in failed]
    if completed:
        rmse = np.sqrt(np.mean(loc_err[completed] ** 2, axis=0))
    else:
        rmse = np.full(k_n, np.nan)

    return RunArtifacts(
        mode=config.mode,
        seed=config.seed,
        horizon=k_n,
        gospa_params=config.gospa,
        gospa=gospa_out,
        gospa_by_vehicle=gospa_veh,
        loc_err=loc_err,
        rmse=rmse,
        fusion_log=fusion_log,
        failed_runs=failed,
        wallclock=time.perf_counter() - t0,
    )


def _single_run(config, scenario, seed_seq, run_idx, gospa_out, gospa_veh, loc_err,
                fusion_log):
    children = seed_seq.spawn(1 + len(scenario.vehicles))
    sim_rng = np.random.default_rng(children[0])
    truth = generate_truth(scenario, sim_rng)
    env = truth.env
    init_cov = np.diag(config.init_std**2)
    params = config.filter_params()

    filters = [
        LocalFilter(env, params, config.noise, scenario.vehicles[n], init_cov,
                    children[1 + n])
        for n in range(len(scenario.vehicles))
    ]
    fovs = [AccumulatedFov(env) for _ in scenario.vehicles]
    station = BaseStation(config.noise, scenario.dt, config.survival_prob,
                          config.fusion)

    n_v = len(scenario.vehicles)
    schedules = [scenario.fusion_steps(n) for n in range(n_v)]

    for k in range(1, scenario.horizon + 1):
        # Metrics snapshot the corrected filter state at scan time; fusion
        # exchanges then apply to subsequent steps.
        sq_err = 0.0
        per_type = {t: np.zeros(4) for t in MAP_TYPES}
        for n in range(n_v):
            filters[n].predict(scenario.dt)
            Z = generate_measurements(truth.vehicle(n, k), truth.targets(k, n),
                                      env, config.noise, config.clutter, sim_rng)
            filters[n].correct(Z)
            filters[n].resample()
            est = filters[n].estimate()
            fovs[n].add_pose(est.vehicle.position)
            truth_maps = truth.landmark_truth(k, n)
            for ttype in MAP_TYPES:
                estimates = est.landmarks.get(ttype, np.zeros((0, 3)))
                res = np.array(gospa(estimates, truth_maps[ttype], config.gospa),
                               dtype=float)
                gospa_veh[ttype][run_idx, k - 1, n] = res
                per_type[ttype] += res
            sq_err += float(np.sum((est.vehicle.position - truth.vehicle(n, k).position) ** 2))
        for ttype in MAP_TYPES:
            gospa_out[ttype][run_idx, k - 1] = per_type[ttype] / n_v
        loc_err[run_idx, k - 1] = np.sqrt(sq_err / n_v)

        for n in range(n_v):
            if k in schedules[n]:
                pre_count = len(station.log)
                station.fuse_uplink(filters[n], fovs[n], k, n, config.mode)
                for rec in station.log[pre_count:]:
                    fusion_log.append({"run": run_idx, **rec})
