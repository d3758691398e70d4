"""mmWave channel geometry: the forward map from (vehicle, landmark) to
TOA/AOA/AOD channel parameters, its closed-form inverse used for track
initiation, mirror geometry for virtual anchors, and field-of-view rules.

TOA is kept range-equivalent (meters) and includes the vehicle clock bias.
Azimuths live in (-pi, pi], elevations in [-pi/2, pi/2]; the AOA azimuth is
expressed in the vehicle frame (global azimuth minus heading).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    BS,
    VA,
    SP,
    VS,
    LANDMARK_TYPES,
    STATIC_TYPES,
    Target,
    VehicleState,
    wrap_angle,
)

_NORM_FLOOR = 1e-12
_PARALLEL_EPS = 1e-9


class GeometryError(ValueError):
    """Degenerate measurement geometry (coincident points, grazing planes)."""


class InversionError(ValueError):
    """Measurement cannot be explained by any landmark position."""


@dataclass
class Plane:
    """Reflecting surface n.x = offset with unit normal n."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm < _NORM_FLOOR:
            raise GeometryError("plane normal must be nonzero")
        self.normal = n / norm
        self.offset = float(self.offset) / norm

    def signed_distance(self, points):
        return np.asarray(points, dtype=float) @ self.normal - self.offset


@dataclass
class Measurement:
    """One channel-parameter vector [toa, aoa_az, aoa_el, aod_az, aod_el]."""

    toa: float
    aoa_az: float
    aoa_el: float
    aod_az: float
    aod_el: float

    def as_array(self):
        return np.array([self.toa, self.aoa_az, self.aoa_el, self.aod_az, self.aod_el])

    @classmethod
    def from_array(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(z[0], z[1], z[2], z[3], z[4])


# Measurement components that are angles (for residual wrapping).
ANGULAR_COMPONENTS = np.array([False, True, True, True, True])


@dataclass
class Environment:
    """Static propagation environment plus detection/FOV parameters.

    min_range is a small receiver blind zone for scatterer-type targets; it
    keeps hypotheses sitting on the receiver itself (such as the vehicle's own
    uplinked posterior) undetectable.
    """

    bs_position: np.ndarray
    reflecting_surfaces: list = field(default_factory=list)
    sp_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    fov_range_sp: float = 50.0
    fov_range_vs: float = 50.0
    detection_prob: float = 0.95
    gamma_d: float = 0.9
    min_range: float = 3.0

    def __post_init__(self):
        self.bs_position = np.asarray(self.bs_position, dtype=float)
        self.sp_positions = np.atleast_2d(np.asarray(self.sp_positions, dtype=float)) \
            if len(self.sp_positions) else np.zeros((0, 3))
        if not 0.0 <= self.detection_prob <= 1.0:
            raise ValueError("detection_prob must lie in [0, 1]")
        if self.fov_range_sp <= 0 or self.fov_range_vs <= 0:
            raise ValueError("FOV ranges must be positive")

    def va_positions(self):
        """Mirror image of the BS across each reflecting surface."""
        return np.array([mirror_bs(self.bs_position, s) for s in self.reflecting_surfaces]) \
            if self.reflecting_surfaces else np.zeros((0, 3))

    def fov_range(self, ttype):
        return self.fov_range_sp if ttype == SP else self.fov_range_vs


def mirror_bs(bs, surface: Plane):
    """Reflect a point across a plane (Householder reflection)."""
    p = np.asarray(bs, dtype=float)
    return p - 2.0 * surface.signed_distance(p) * surface.normal


def _direction_angles(delta):
    """Azimuth/elevation of direction vectors (N,3); returns (az, el, range)."""
    delta = np.atleast_2d(delta)
    r = np.linalg.norm(delta, axis=1)
    r_safe = np.maximum(r, _NORM_FLOOR)
    az = np.arctan2(delta[:, 1], delta[:, 0])
    el = np.arcsin(np.clip(delta[:, 2] / r_safe, -1.0, 1.0))
    return az, el, r


def incidence_point(va_pos, veh_pos, surface: Plane):
    """Intersection of the VA->vehicle segment with the generating surface.

    Returns (point, t) with t the segment parameter from the VA; physical
    reflections have t in [0, 1].
    """
    va_pos = np.asarray(va_pos, dtype=float)
    veh_pos = np.asarray(veh_pos, dtype=float)
    denom = surface.normal @ (veh_pos - va_pos)
    if abs(denom) < _PARALLEL_EPS:
        raise GeometryError("VA path grazes the reflecting surface")
    t = (surface.offset - surface.normal @ va_pos) / denom
    return va_pos + t * (veh_pos - va_pos), t


def va_visible(va_pos, veh_pos, surface: Plane):
    """Whether the mirror path exists: incidence point within the segment."""
    try:
        _, t = incidence_point(va_pos, veh_pos, surface)
    except GeometryError:
        return False
    return 0.0 <= t <= 1.0


def measure_positions(veh_pos, heading, clock_bias, positions, ttype, bs_pos):
    """Noiseless channel parameters (N,5) for landmark positions (N,3).

    VA hypotheses use the perpendicular-bisector plane of (BS, position) as
    the implied reflector, which coincides with the true surface for genuine
    mirrored-BS positions. Near-degenerate geometry is clamped, not raised;
    single-landmark callers wanting errors use measure().
    """
    veh_pos = np.asarray(veh_pos, dtype=float)
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    bs_pos = np.asarray(bs_pos, dtype=float)

    to_target = x - veh_pos
    aoa_az_g, aoa_el, r_veh = _direction_angles(to_target)
    aoa_az = wrap_angle(aoa_az_g - heading)

    if ttype in (BS, VA):
        toa = r_veh + clock_bias
        if ttype == BS:
            # Departure at the (hypothesised) BS position toward the vehicle.
            aod_az, aod_el, _ = _direction_angles(veh_pos - x)
        else:
            # Departure toward the incidence point on the bisector plane of
            # (BS, VA): n.p = n.(bs+va)/2 along the VA -> vehicle line.
            dvb = x - bs_pos
            dist_bs = np.maximum(np.linalg.norm(dvb, axis=1), _NORM_FLOOR)
            n = dvb / dist_bs[:, None]
            num = -0.5 * dist_bs  # d_plane - n.va = -|va - bs| / 2
            denom = np.einsum("ij,ij->i", n, veh_pos - x)
            denom = np.where(np.abs(denom) < _PARALLEL_EPS,
                             np.copysign(_PARALLEL_EPS, denom + _NORM_FLOOR), denom)
            t = num / denom
            q = x + t[:, None] * (veh_pos - x)
            aod_az, aod_el, _ = _direction_angles(q - bs_pos)
    elif ttype in (SP, VS):
        r_bs = np.linalg.norm(x - bs_pos, axis=1)
        toa = r_bs + r_veh + clock_bias
        aod_az, aod_el, _ = _direction_angles(x - bs_pos)
    else:
        raise ValueError(f"unknown landmark type {ttype!r}")

    return np.column_stack([toa, aoa_az, aoa_el, wrap_angle(aod_az), aod_el])


def measure(vehicle: VehicleState, target: Target, env: Environment) -> Measurement:
    """Noiseless measurement of one landmark; raises on degenerate geometry."""
    if target.type not in LANDMARK_TYPES:
        raise ValueError(f"unknown landmark type {target.type!r}")
    if np.linalg.norm(target.position - vehicle.position) < _NORM_FLOOR:
        raise GeometryError("vehicle and target positions coincide")
    if target.type == VA:
        # Degeneracy check against the implied reflector.
        dvb = target.position - env.bs_position
        if np.linalg.norm(dvb) < _NORM_FLOOR:
            raise GeometryError("VA coincides with the BS")
        n = dvb / np.linalg.norm(dvb)
        if abs(n @ (vehicle.position - target.position)) < _PARALLEL_EPS:
            raise GeometryError("VA path grazes the reflecting surface")
    z = measure_positions(
        vehicle.position, vehicle.heading, vehicle.clock_bias,
        target.position[None, :], target.type, env.bs_position,
    )
    return Measurement.from_array(z[0])


def invert_positions(veh_pos, heading, clock_bias, z, ttype, bs_pos):
    """Positions (N,3) reproducing measurements (N,5) under measure_positions.

    Returns (positions, valid). BS/VA hypotheses lie on the AOA ray at range
    toa - bias; SP/VS hypotheses lie where the AOA ray meets the TOA ellipsoid
    with foci at the BS and the vehicle (the quadratic terms cancel, so the
    ray parameter has a closed form). Entries violating positivity of the ray
    parameter or of the residual BS leg are flagged invalid.
    """
    veh_pos = np.asarray(veh_pos, dtype=float)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    d = z[:, 0] - clock_bias
    az = z[:, 1] + heading
    el = z[:, 2]
    u = np.column_stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])

    if ttype in (BS, VA):
        valid = d > 0
        pos = veh_pos + d[:, None] * u
        return pos, valid

    w = np.asarray(bs_pos, dtype=float) - veh_pos
    wnorm2 = w @ w
    denom = d - u @ w
    safe = np.abs(denom) > _PARALLEL_EPS
    s = np.where(safe, (d**2 - wnorm2) / (2.0 * np.where(safe, denom, 1.0)), -1.0)
    valid = safe & (d > 0) & (s > 0) & (d - s > 0)
    pos = veh_pos + s[:, None] * u
    return pos, valid


def invert_measurement(vehicle: VehicleState, z, ttype, env: Environment):
    """Single-measurement inverse; raises InversionError when inconsistent."""
    arr = z.as_array() if isinstance(z, Measurement) else np.asarray(z, dtype=float)
    pos, valid = invert_positions(
        vehicle.position, vehicle.heading, vehicle.clock_bias,
        arr[None, :], ttype, env.bs_position,
    )
    if not valid[0]:
        raise InversionError(f"no {ttype} position is consistent with the measurement")
    return pos[0]


def detection_prob_positions(veh_pos, positions, ttype, env: Environment):
    """Detection probabilities (N,) for landmark positions (N,3).

    BS and VA paths are detectable from anywhere; scatterer types require the
    landmark inside [min_range, fov_range] of the receiver.
    """
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    if ttype in (BS, VA):
        return np.full(x.shape[0], env.detection_prob)
    r = np.linalg.norm(x - np.asarray(veh_pos, dtype=float), axis=1)
    inside = (r <= env.fov_range(ttype)) & (r >= env.min_range)
    return np.where(inside, env.detection_prob, 0.0)


def detection_probability(vehicle: VehicleState, target: Target, env: Environment) -> float:
    """Detection probability of one landmark from the vehicle's position."""
    return float(
        detection_prob_positions(vehicle.position, target.position[None, :], target.type, env)[0]
    )
