"""Cooperative mmWave radio SLAM with multi-model PHD maps.

Per-vehicle Rao-Blackwellized particle-filter SLAM over base-station,
virtual-anchor, scatter-point and moving vehicle-scatterer landmarks, with
arithmetic-average map fusion at the base station and GOSPA/RMSE evaluation.
"""

from .dynamics import (
    BS,
    SP,
    VA,
    VS,
    NoiseConfig,
    Target,
    VehicleState,
    step_target,
    step_vehicle,
    transition_jacobian_vs,
)
from .geometry import (
    Environment,
    Measurement,
    Plane,
    detection_probability,
    invert_measurement,
    measure,
    mirror_bs,
)
from .gmphd import GaussianComponent, GmPhd, ckf_update, dither, prune_merge
from .local_slam import ClutterModel, FilterParams, LocalFilter, Particle
from .fusion import (
    AccumulatedFov,
    BaseStation,
    EgoPosterior,
    FusionParams,
    average_map,
    downlink,
    fuse_static,
    fuse_vs,
    msm_distance,
    place_ego,
    predict_bs_vs,
)
from .metrics import GospaParams, gospa, rmse
from .sim import RunConfig, Scenario, generate_measurements, generate_truth, run_experiment

__version__ = "0.1.0"
