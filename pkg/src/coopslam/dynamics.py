"""Motion models: polar coordinated-turn vehicles, Cartesian coordinated-turn
vehicle scatterers, and Dirac transitions for static landmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Landmark type tags. BS/VA/SP are static; VS is the moving scatterer type.
BS, VA, SP, VS = "BS", "VA", "SP", "VS"
LANDMARK_TYPES = (BS, VA, SP, VS)
STATIC_TYPES = (BS, VA, SP)
BIRTH_TYPES = (VA, SP, VS)
MAP_TYPES = (VA, SP, VS)

# Below this turn rate (rad/s) the closed-form coordinated turn is replaced by
# its straight-line / constant-velocity limit to avoid cancellation.
TURN_RATE_EPS = 1e-6

TWO_PI = 2.0 * np.pi


def wrap_angle(a):
    """Wrap angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), TWO_PI)


@dataclass
class VehicleState:
    """Ego state: 3-D position [m], heading [rad], speed [m/s], turn rate
    [rad/s], and range-equivalent clock bias [m] (7 components total)."""

    position: np.ndarray
    heading: float
    speed: float
    turn_rate: float
    clock_bias: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.heading = float(wrap_angle(self.heading))

    def as_vector(self):
        return np.concatenate(
            [self.position, [self.heading, self.speed, self.turn_rate, self.clock_bias]]
        )

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(v[:3].copy(), v[3], v[4], v[5], v[6])


@dataclass
class Target:
    """Landmark state: position [m], velocity [m/s], turn rate [rad/s] and a
    type tag. Static types carry zero velocity and turn rate."""

    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    turn_rate: float = 0.0
    type: str = SP

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.type not in LANDMARK_TYPES:
            raise ValueError(f"unknown landmark type {self.type!r}")
        if self.type in STATIC_TYPES:
            if np.any(self.velocity != 0.0) or self.turn_rate != 0.0:
                raise ValueError(f"{self.type} targets must have zero velocity and turn rate")

    def as_vector(self):
        return np.concatenate([self.position, self.velocity, [self.turn_rate]])

    @classmethod
    def from_vector(cls, v, type=SP):
        v = np.asarray(v, dtype=float)
        return cls(v[:3].copy(), v[3:6].copy(), v[6], type)


def _diag_cov(stds):
    stds = np.asarray(stds, dtype=float)
    return np.diag(stds**2)


@dataclass
class NoiseConfig:
    """Process / measurement covariances. All symmetric PSD."""

    vehicle_process_cov: np.ndarray  # 7x7, vehicle transition noise
    vs_process_cov: np.ndarray       # 7x7, VS transition noise
    measurement_cov: np.ndarray      # 5x5
    dither_cov: np.ndarray           # 7x7, added to VS covariances at prediction

    @classmethod
    def from_stds(cls, vehicle_std, vs_std, measurement_std, dither_diag):
        return cls(
            vehicle_process_cov=_diag_cov(vehicle_std),
            vs_process_cov=_diag_cov(vs_std),
            measurement_cov=_diag_cov(measurement_std),
            dither_cov=np.diag(np.asarray(dither_diag, dtype=float)),
        )


def step_vehicle_vec(states, dt, noise=None):
    """Coordinated-turn update of stacked vehicle states (N,7).

    State layout [x, y, z, heading, speed, turn_rate, clock_bias]; speed,
    turn rate, altitude and bias are constant apart from additive noise.
    """
    s = np.atleast_2d(np.asarray(states, dtype=float)).copy()
    alpha, zeta, xi = s[:, 3], s[:, 4], s[:, 5]
    turning = np.abs(xi) > TURN_RATE_EPS
    xi_safe = np.where(turning, xi, 1.0)

    dx_turn = (zeta / xi_safe) * (np.sin(alpha + xi * dt) - np.sin(alpha))
    dy_turn = -(zeta / xi_safe) * (np.cos(alpha + xi * dt) - np.cos(alpha))
    dx_line = zeta * dt * np.cos(alpha)
    dy_line = zeta * dt * np.sin(alpha)

    s[:, 0] += np.where(turning, dx_turn, dx_line)
    s[:, 1] += np.where(turning, dy_turn, dy_line)
    s[:, 3] = alpha + xi * dt
    if noise is not None:
        s += np.atleast_2d(np.asarray(noise, dtype=float))
    s[:, 3] = wrap_angle(s[:, 3])
    return s


def step_vehicle(state: VehicleState, dt, noise=None) -> VehicleState:
    """One coordinated-turn step of a single vehicle (dt in seconds)."""
    out = step_vehicle_vec(state.as_vector()[None, :], dt, None if noise is None else np.asarray(noise)[None, :])
    return VehicleState.from_vector(out[0])


def step_vs_vec(states, dt, noise=None):
    """Cartesian coordinated-turn update of stacked VS states (N,7).

    Layout [x, y, z, vx, vy, vz, turn_rate]; planar velocity rotates by
    xi*dt, altitude advances with vz, turn rate is constant.
    """
    t = np.atleast_2d(np.asarray(states, dtype=float)).copy()
    vx, vy, vz, xi = t[:, 3].copy(), t[:, 4].copy(), t[:, 5], t[:, 6]
    turning = np.abs(xi) > TURN_RATE_EPS
    xi_safe = np.where(turning, xi, 1.0)
    s_, c_ = np.sin(xi * dt), np.cos(xi * dt)

    dx_turn = (vx * s_ - vy * (1.0 - c_)) / xi_safe
    dy_turn = (vx * (1.0 - c_) + vy * s_) / xi_safe

    t[:, 0] += np.where(turning, dx_turn, vx * dt)
    t[:, 1] += np.where(turning, dy_turn, vy * dt)
    t[:, 2] += vz * dt
    t[:, 3] = c_ * vx - s_ * vy
    t[:, 4] = s_ * vx + c_ * vy
    if noise is not None:
        t += np.atleast_2d(np.asarray(noise, dtype=float))
    return t


def step_target(target: Target, dt, noise=None) -> Target:
    """Single-target transition: Dirac for static types, coordinated turn
    for VS (plus additive noise when supplied)."""
    if target.type in STATIC_TYPES:
        return Target(target.position.copy(), target.velocity.copy(), target.turn_rate, target.type)
    out = step_vs_vec(target.as_vector()[None, :], dt, None if noise is None else np.asarray(noise)[None, :])
    return Target.from_vector(out[0], type=target.type)


def vs_jacobian_vec(states, dt):
    """Jacobians (N,7,7) of step_vs_vec at the given states."""
    t = np.atleast_2d(np.asarray(states, dtype=float))
    n = t.shape[0]
    vx, vy, xi = t[:, 3], t[:, 4], t[:, 6]
    turning = np.abs(xi) > TURN_RATE_EPS
    xi_safe = np.where(turning, xi, 1.0)
    s_, c_ = np.sin(xi * dt), np.cos(xi * dt)

    # Entries of the position block and their turn-rate sensitivities, with
    # series limits at xi -> 0.
    swt = np.where(turning, s_ / xi_safe, dt)                     # sin(w dt)/w
    cwt1 = np.where(turning, (1.0 - c_) / xi_safe, 0.0)           # (1-cos)/w
    d_swt = np.where(turning, (dt * c_ * xi_safe - s_) / xi_safe**2, 0.0)
    d_cwt1 = np.where(turning, (dt * s_ * xi_safe - (1.0 - c_)) / xi_safe**2, 0.5 * dt**2)

    J = np.zeros((n, 7, 7))
    J[:, 0, 0] = J[:, 1, 1] = J[:, 2, 2] = 1.0
    J[:, 0, 3] = swt
    J[:, 0, 4] = -cwt1
    J[:, 1, 3] = cwt1
    J[:, 1, 4] = swt
    J[:, 2, 5] = dt
    J[:, 0, 6] = vx * d_swt - vy * d_cwt1
    J[:, 1, 6] = vx * d_cwt1 + vy * d_swt
    J[:, 3, 3] = c_
    J[:, 3, 4] = -s_
    J[:, 4, 3] = s_
    J[:, 4, 4] = c_
    J[:, 3, 6] = dt * (-s_ * vx - c_ * vy)
    J[:, 4, 6] = dt * (c_ * vx - s_ * vy)
    J[:, 5, 5] = 1.0
    J[:, 6, 6] = 1.0
    return J


def transition_jacobian_vs(target: Target, dt):
    """7x7 Jacobian of step_target; identity for static (Dirac) types."""
    if target.type in STATIC_TYPES:
        return np.eye(7)
    return vs_jacobian_vec(target.as_vector()[None, :], dt)[0]
