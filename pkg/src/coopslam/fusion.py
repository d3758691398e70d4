"""Global map fusion at the base station: particle-averaged uplink maps,
ego-vehicle placement into the averaged VS intensity, arithmetic-average
fusion with proximity gating and accumulated-FOV weight rules, BS-side VS
prediction between asynchronous uplinks, and the downlink overwrite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dynamics import SP, VA, VS, NoiseConfig, step_vs_vec, vs_jacobian_vec
from .gmphd import GmPhd, concat_mixtures, prune_merge, regularize_covs
from .geometry import Environment, detection_prob_positions
from .local_slam import LocalFilter

_UNGATED_COST = 1e12


def msm_distance(mean1, cov1, mean2, cov2):
    """Maximum symmetric Mahalanobis distance (squared form) between two
    Gaussians: max of the two directed squared Mahalanobis distances."""
    d = np.asarray(mean1, dtype=float) - np.asarray(mean2, dtype=float)
    q1 = d @ np.linalg.solve(np.asarray(cov1, dtype=float), d)
    q2 = d @ np.linalg.solve(np.asarray(cov2, dtype=float), d)
    return float(max(q1, q2))


def msm_matrix(m1, P1, m2, P2):
    """Pairwise MSM distances between two stacked Gaussian sets: (Q1, Q2)."""
    if len(m1) == 0 or len(m2) == 0:
        return np.zeros((len(m1), len(m2)))
    diff = m1[:, None, :] - m2[None, :, :]                      # (Q1, Q2, d)
    inv1 = np.linalg.inv(P1)
    inv2 = np.linalg.inv(P2)
    q1 = np.einsum("abd,ade,abe->ab", diff, inv1, diff)
    q2 = np.einsum("abd,bde,abe->ab", diff, inv2, diff)
    return np.maximum(q1, q2)


def _match(dist, gate, method="greedy"):
    """One-to-one matching restricted to gated pairs; returns index pairs."""
    if not gate.any():
        return []
    if method == "hungarian":
        cost = np.where(gate, dist, _UNGATED_COST)
        rows, cols = linear_sum_assignment(cost)
        return [(i, j) for i, j in zip(rows, cols) if gate[i, j]]
    pairs = np.argwhere(gate)
    order = np.argsort(dist[pairs[:, 0], pairs[:, 1]], kind="stable")
    used_a, used_b, out = set(), set(), []
    for i, j in pairs[order]:
        if i not in used_a and j not in used_b:
            out.append((int(i), int(j)))
            used_a.add(int(i))
            used_b.add(int(j))
    return out


def _moment_match(weights, means, covs):
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    mean = w @ means / total
    spread = means - mean
    cov = np.einsum("i,ijk->jk", w, covs) / total \
        + np.einsum("i,ij,ik->jk", w, spread, spread) / total
    return total, mean, cov


@dataclass
class AccumulatedFov:
    """Region a vehicle could have detected targets in since its last uplink,
    discretized as the pose samples visited in between."""

    env: Environment
    positions: list = field(default_factory=list)

    def add_pose(self, position):
        self.positions.append(np.asarray(position, dtype=float).copy())

    def reset(self):
        self.positions = []

    def contains_many(self, points, ttype):
        points = np.atleast_2d(points)
        if not self.positions:
            return np.zeros(points.shape[0], dtype=bool)
        hit = np.zeros(points.shape[0], dtype=bool)
        for pose in self.positions:
            pd = detection_prob_positions(pose, points, ttype, self.env)
            hit |= pd >= self.env.gamma_d
        return hit

    def contains(self, point, ttype):
        return bool(self.contains_many(np.asarray(point)[None, :], ttype)[0])


@dataclass
class EgoPosterior:
    """Gaussian approximation of the vehicle posterior in target-state
    coordinates [position, velocity, turn rate]."""

    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def from_filter(cls, filt: LocalFilter):
        w = filt.weights
        states = np.stack([p.state.as_vector() for p in filt.particles])
        t = np.zeros((len(w), 7))
        t[:, :3] = states[:, :3]
        t[:, 3] = states[:, 4] * np.cos(states[:, 3])
        t[:, 4] = states[:, 4] * np.sin(states[:, 3])
        t[:, 6] = states[:, 5]
        mean = w @ t
        diff = t - mean
        cov = np.einsum("i,ij,ik->jk", w, diff, diff)
        return cls(mean, regularize_covs(cov[None, :, :])[0])


@dataclass
class FusionParams:
    t_md_l: float = 20.0        # position-block MSM gate
    t_md_v: float = 20.0        # velocity-block MSM gate (VS fusion)
    false_alarm_weight: float = 0.25  # unmatched BS VS component inside the FOV
    prune_threshold: float = 0.1
    merge_threshold: float = 4.0
    max_components: int = 100
    matching: str = "greedy"    # greedy | hungarian
    # Euclidean radius [m] for coalescing the per-particle copies of one
    # landmark while averaging. Copies are scattered by the self-pose error
    # but carry conditional (per-trajectory) covariances, so a Mahalanobis
    # gate cannot group them; without grouping, every copy has mass ~1/P and
    # the 0.1 prune would annihilate the averaged map.
    average_cluster_radius: float = 2.5

    def reduce(self, phd):
        return prune_merge(phd, self.prune_threshold, self.merge_threshold,
                           self.max_components)


def _cluster_by_position(phd: GmPhd, radius):
    """Moment-match groups of components within a Euclidean position radius
    of the heaviest remaining one (mass-preserving)."""
    if len(phd) <= 1:
        return phd.copy()
    out_w, out_m, out_P = [], [], []
    alive = np.ones(len(phd), dtype=bool)
    masked_w = phd.w.copy()
    while alive.any():
        j = int(np.argmax(masked_w))
        idx = np.flatnonzero(alive)
        dist = np.linalg.norm(phd.m[idx, :3] - phd.m[j, :3], axis=1)
        group = idx[dist <= radius]
        w, m, P = _moment_match(phd.w[group], phd.m[group], phd.P[group])
        out_w.append(w)
        out_m.append(m)
        out_P.append(P)
        alive[group] = False
        masked_w[group] = -np.inf
    return GmPhd(phd.type, np.array(out_w), np.stack(out_m), np.stack(out_P))


def average_map(particles, types, params: FusionParams):
    """Particle-weighted average of the per-particle intensities.

    The per-particle copies of each landmark are coalesced by position first
    (restoring the landmark's full averaged mass plus the between-particle
    spread), then the usual pruning/merging drops sub-threshold debris.
    Particle weights are assumed normalized.
    """
    out = {}
    for ttype in types:
        scaled = [p.maps[ttype].scaled(p.weight) for p in particles]
        stacked = concat_mixtures(ttype, scaled)
        clustered = _cluster_by_position(stacked, params.average_cluster_radius)
        out[ttype] = params.reduce(clustered)
    return out


def place_ego(avg_vs: GmPhd, ego: EgoPosterior, t_md_l):
    """Replace VS components matching the ego posterior (position-block MSM
    inside the gate) with the ego posterior itself at unit weight."""
    if len(avg_vs):
        d = msm_matrix(avg_vs.m[:, :3], avg_vs.P[:, :3, :3],
                       ego.mean[None, :3], ego.cov[None, :3, :3])[:, 0]
        keep = d >= t_md_l
        base = GmPhd(VS, avg_vs.w[keep], avg_vs.m[keep], avg_vs.P[keep])
    else:
        base = GmPhd.empty(VS)
    ego_phd = GmPhd(VS, np.array([1.0]), ego.mean[None, :], ego.cov[None, :, :])
    return concat_mixtures(VS, [base, ego_phd])


def fuse_static(bs_map: GmPhd, veh_map: GmPhd, fov: AccumulatedFov,
                params: FusionParams):
    """Arithmetic-average fusion for static-style maps.

    Matched pairs (position-block MSM inside the gate) are averaged at weight
    1/2 each and moment-matched; unmatched uplink components keep weight 1;
    unmatched BS components keep weight 1 outside the accumulated FOV and are
    halved inside it (vehicle looked there and saw nothing).
    """
    ttype = bs_map.type
    dist = msm_matrix(bs_map.m[:, :3], bs_map.P[:, :3, :3],
                      veh_map.m[:, :3], veh_map.P[:, :3, :3])
    pairs = _match(dist, dist < params.t_md_l, params.matching)

    merged = [
        _moment_match([0.5 * bs_map.w[i], 0.5 * veh_map.w[j]],
                      np.stack([bs_map.m[i], veh_map.m[j]]),
                      np.stack([bs_map.P[i], veh_map.P[j]]))
        for i, j in pairs
    ]
    matched_bs = {i for i, _ in pairs}
    matched_veh = {j for _, j in pairs}

    un_bs = np.array([i for i in range(len(bs_map)) if i not in matched_bs], dtype=int)
    un_veh = np.array([j for j in range(len(veh_map)) if j not in matched_veh], dtype=int)

    pieces = []
    if merged:
        w, m, P = zip(*merged)
        pieces.append(GmPhd(ttype, np.array(w), np.stack(m), np.stack(P)))
    if len(un_bs):
        inside = fov.contains_many(bs_map.m[un_bs, :3], ttype)
        beta = np.where(inside, 0.5, 1.0)
        pieces.append(GmPhd(ttype, beta * bs_map.w[un_bs], bs_map.m[un_bs], bs_map.P[un_bs]))
    if len(un_veh):
        pieces.append(GmPhd(ttype, veh_map.w[un_veh], veh_map.m[un_veh], veh_map.P[un_veh]))
    return params.reduce(concat_mixtures(ttype, pieces))


def predict_bs_vs(fused_vs: GmPhd, n_steps, dt, noise: NoiseConfig, survival_prob):
    """Propagate the BS-side VS intensity over elapsed steps without births:
    coordinated-turn linearization plus process noise, survival decay per step."""
    if n_steps <= 0 or not len(fused_vs):
        return fused_vs.copy()
    w, m, P = fused_vs.w.copy(), fused_vs.m.copy(), fused_vs.P.copy()
    for _ in range(int(n_steps)):
        jac = vs_jacobian_vec(m, dt)
        P = np.einsum("qij,qjk,qlk->qil", jac, P, jac) + noise.vs_process_cov
        m = step_vs_vec(m, dt)
        w = w * survival_prob
    return GmPhd(VS, w, m, regularize_covs(P))


def fuse_vs(bs_vs: GmPhd, veh_vs: GmPhd, fov: AccumulatedFov, params: FusionParams):
    """VS-aware arithmetic-average fusion.

    Pairs must be close in both the position and the velocity blocks. Matched
    pairs are weighted by inverse average covariance trace (uncertainty
    rho = trace(T)/dim) and moment-matched; unmatched uplink components keep
    weight 1; unmatched BS components are kept at weight 1 outside the
    accumulated FOV and down-weighted as probable stale false alarms inside.
    """
    dist_p = msm_matrix(bs_vs.m[:, :3], bs_vs.P[:, :3, :3],
                        veh_vs.m[:, :3], veh_vs.P[:, :3, :3])
    dist_v = msm_matrix(bs_vs.m[:, 3:6], bs_vs.P[:, 3:6, 3:6],
                        veh_vs.m[:, 3:6], veh_vs.P[:, 3:6, 3:6])
    gate = (dist_p < params.t_md_l) & (dist_v < params.t_md_v)
    pairs = _match(dist_p, gate, params.matching)

    dim = bs_vs.dim if len(bs_vs) else 7
    merged = []
    for i, j in pairs:
        rho1 = np.trace(bs_vs.P[i]) / dim
        rho2 = np.trace(veh_vs.P[j]) / dim
        beta1 = (1.0 / rho1) / (1.0 / rho1 + 1.0 / rho2)
        beta2 = 1.0 - beta1
        merged.append(_moment_match(
            [beta1 * bs_vs.w[i], beta2 * veh_vs.w[j]],
            np.stack([bs_vs.m[i], veh_vs.m[j]]),
            np.stack([bs_vs.P[i], veh_vs.P[j]])))

    matched_bs = {i for i, _ in pairs}
    matched_veh = {j for _, j in pairs}
    un_bs = np.array([i for i in range(len(bs_vs)) if i not in matched_bs], dtype=int)
    un_veh = np.array([j for j in range(len(veh_vs)) if j not in matched_veh], dtype=int)

    pieces = []
    if merged:
        w, m, P = zip(*merged)
        pieces.append(GmPhd(VS, np.array(w), np.stack(m), np.stack(P)))
    if len(un_bs):
        inside = fov.contains_many(bs_vs.m[un_bs, :3], VS)
        beta = np.where(inside, params.false_alarm_weight, 1.0)
        pieces.append(GmPhd(VS, beta * bs_vs.w[un_bs], bs_vs.m[un_bs], bs_vs.P[un_bs]))
    if len(un_veh):
        pieces.append(GmPhd(VS, veh_vs.w[un_veh], veh_vs.m[un_veh], veh_vs.P[un_veh]))
    return params.reduce(concat_mixtures(VS, pieces))


def downlink(filt: LocalFilter, fused_maps):
    """Overwrite every particle's maps with the fused intensities (deep copy
    per particle); particle weights are untouched."""
    for p in filt.particles:
        for ttype in filt.map_types:
            if ttype in fused_maps:
                p.maps[ttype] = fused_maps[ttype].copy()


class BaseStation:
    """Serialized fused-map owner; applies uplinks in timestamp order."""

    def __init__(self, noise: NoiseConfig, dt, survival_prob,
                 params: FusionParams = None):
        self.params = params or FusionParams()
        self.noise = noise
        self.dt = dt
        self.survival_prob = survival_prob
        self.maps = {VA: GmPhd.empty(VA), SP: GmPhd.empty(SP), VS: GmPhd.empty(VS)}
        self.vs_step = None
        self.log = []

    def fuse_uplink(self, filt: LocalFilter, fov: AccumulatedFov, step, vehicle_id,
                    mode):
        """One uplink/fusion/downlink exchange with the given vehicle.

        The VS intensity takes part in fusion only in full mode: without the
        fusion-side countermeasure there is no defined exchange for moving
        targets, so cm1 keeps its VS map local.
        """
        types = [t for t in filt.map_types if t != VS or mode == "full"]
        uplinked = average_map(filt.particles, types, self.params)
        if mode == "full" and VS in types:
            ego = EgoPosterior.from_filter(filt)
            uplinked[VS] = place_ego(uplinked[VS], ego, self.params.t_md_l)
            elapsed = 0 if self.vs_step is None else step - self.vs_step
            self.maps[VS] = predict_bs_vs(self.maps[VS], elapsed, self.dt,
                                          self.noise, self.survival_prob)
            self.vs_step = step

        for ttype in types:
            pre = self.maps[ttype]
            if ttype == VS and mode == "full":
                fused = fuse_vs(pre, uplinked[ttype], fov, self.params)
            else:
                fused = fuse_static(pre, uplinked[ttype], fov, self.params)
            self.log.append({
                "step": int(step),
                "vehicle": int(vehicle_id),
                "map_type": ttype,
                "pre_bs_count": len(pre),
                "pre_bs_mass": pre.mass(),
                "uplink_count": len(uplinked[ttype]),
                "uplink_mass": uplinked[ttype].mass(),
                "post_count": len(fused),
                "post_mass": fused.mass(),
            })
            self.maps[ttype] = fused

        downlink(filt, {t: self.maps[t] for t in types})
        fov.reset()
