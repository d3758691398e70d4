"""Per-vehicle Rao-Blackwellized particle-filter SLAM.

Each particle carries a vehicle-state hypothesis plus one Gaussian-mixture
intensity per landmark type. Two operating modes: 'baseline' keeps static
maps only (moving scatterers end up competing as clutter/ghosts), while
'cm1'/'full' additionally maintain a VS intensity with a coordinated-turn
prior, covariance dithering, and VS-aware measurement normalization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    BS,
    SP,
    VA,
    VS,
    NoiseConfig,
    VehicleState,
    step_vehicle_vec,
    step_vs_vec,
    vs_jacobian_vec,
    wrap_angle,
)
from scipy.special import ndtr

from .geometry import (
    ANGULAR_COMPONENTS,
    Environment,
    Measurement,
    detection_prob_positions,
    invert_positions,
)
from .gmphd import (
    GmPhd,
    concat_mixtures,
    cubature_update_mixture,
    measurement_fn,
    prune_merge,
    regularize_covs,
)

logger = logging.getLogger(__name__)

# Variance given to the unobservable state blocks of static-landmark births.
_STATIC_BLOCK_VAR = 1e-9


@dataclass
class ClutterModel:
    """Poisson clutter, uniform over the measurement space
    TOA x AOA-az x AOA-el x AOD-az x AOD-el."""

    poisson_mean: float = 1.0
    toa_max: float = 400.0

    def volume(self):
        return self.toa_max * (2.0 * np.pi) ** 2 * np.pi**2

    def density(self):
        return self.poisson_mean / self.volume()

    def sample(self, rng, count):
        z = np.empty((count, 5))
        z[:, 0] = rng.uniform(0.0, self.toa_max, count)
        z[:, 1] = rng.uniform(-np.pi, np.pi, count)
        z[:, 2] = rng.uniform(-np.pi / 2, np.pi / 2, count)
        z[:, 3] = rng.uniform(-np.pi, np.pi, count)
        z[:, 4] = rng.uniform(-np.pi / 2, np.pi / 2, count)
        return z


@dataclass
class FilterParams:
    mode: str = "full"                  # baseline | cm1 | full
    particles: int = 100
    # Kept well below unity so fresh single-scan interpretations of a
    # measurement cannot outbid an established track in the correction
    # normalizer; acquisition is unaffected (unexplained measurements give
    # their birth nearly the whole unit mass regardless of this value).
    birth_weight: float = 1e-4
    survival_prob: float = 0.99
    prune_threshold: float = 1e-6       # local pruning; must stay below birth_weight
    merge_threshold: float = 4.0        # squared Mahalanobis
    max_components: int = 100
    extraction_thresholds: dict = field(
        default_factory=lambda: {VA: 0.5, SP: 0.5, VS: 0.5})
    likelihood: str = "product"         # 'product' or 'sum' (summed normalizers)
    birth_velocity_var: np.ndarray = field(
        default_factory=lambda: np.array([100.0, 100.0, 0.09]))
    birth_turn_rate_std: float = np.pi / 2
    clutter: ClutterModel = field(default_factory=ClutterModel)
    # Radial width [m] used when integrating the FOV boundary over a map
    # component's uncertainty; covers the self-pose error so a target leaving
    # the FOV does not annihilate its component on the crossing scan.
    fov_taper: float = 2.0

    def __post_init__(self):
        if self.mode not in ("baseline", "cm1", "full"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.likelihood not in ("sum", "product"):
            raise ValueError(f"unknown likelihood form {self.likelihood!r}")
        self.birth_velocity_var = np.asarray(self.birth_velocity_var, dtype=float)

    @property
    def map_types(self):
        return (VA, SP) if self.mode == "baseline" else (VA, SP, VS)


@dataclass
class Particle:
    state: VehicleState
    weight: float
    maps: dict

    def copy(self):
        return Particle(
            VehicleState.from_vector(self.state.as_vector()),
            self.weight,
            {t: g.copy() for t, g in self.maps.items()},
        )


@dataclass
class Estimate:
    vehicle: VehicleState
    landmarks: dict     # type -> (N,3) positions above the extraction threshold


def _sqrt_psd(M):
    eigval, eigvec = np.linalg.eigh(np.asarray(M, dtype=float))
    return eigvec @ np.diag(np.sqrt(np.maximum(eigval, 0.0)))


def expected_detection_prob(veh_pos, phd: GmPhd, ttype, env: Environment, taper=2.0):
    """Detection probability integrated over each component's position
    density (Gaussian radial approximation of the FOV boundary), with the
    taper as a floor on the radial width to absorb self-pose error.

    The hard range cutoff would otherwise crush a component the moment the
    true target leaves the FOV while the mean still sits inside. The inner
    blind-zone edge stays hard so hypotheses on the receiver itself are
    exactly undetectable.
    """
    if not len(phd):
        return np.zeros(0)
    if ttype in (BS, VA):
        return np.full(len(phd), env.detection_prob)
    r = np.linalg.norm(phd.m[:, :3] - np.asarray(veh_pos, dtype=float), axis=1)
    sigma = np.sqrt(np.trace(phd.P[:, :3, :3], axis1=1, axis2=2) / 3.0)
    sigma = np.maximum(sigma, max(taper, 1e-6))
    pd = env.detection_prob * ndtr((env.fov_range(ttype) - r) / sigma)
    return np.where(r < env.min_range, 0.0, pd)


def _as_measurement_array(Z):
    if Z is None or len(Z) == 0:
        return np.zeros((0, 5))
    if isinstance(Z, np.ndarray):
        return np.atleast_2d(Z)
    return np.stack([z.as_array() if isinstance(z, Measurement) else np.asarray(z) for z in Z])


class LocalFilter:
    """RBPF SLAM filter for one vehicle."""

    def __init__(self, env: Environment, params: FilterParams, noise: NoiseConfig,
                 init_state: VehicleState, init_cov, seed_seq=None):
        self.env = env
        self.params = params
        self.noise = noise
        seed_seq = seed_seq if seed_seq is not None else np.random.SeedSequence(0)
        init_ss, predict_ss, birth_ss, resample_ss = seed_seq.spawn(4)
        self._predict_rng = np.random.default_rng(predict_ss)
        self._birth_rng = np.random.default_rng(birth_ss)
        self._resample_rng = np.random.default_rng(resample_ss)
        self._vehicle_noise_sqrt = _sqrt_psd(noise.vehicle_process_cov)
        self._pending_births = None     # measurements from the previous scan

        init_rng = np.random.default_rng(init_ss)
        s0 = init_state.as_vector()
        sqrt_s0 = _sqrt_psd(init_cov)
        draws = s0 + init_rng.standard_normal((params.particles, 7)) @ sqrt_s0.T
        self.particles = [
            Particle(VehicleState.from_vector(v), 1.0 / params.particles,
                     {t: GmPhd.empty(t) for t in params.map_types})
            for v in draws
        ]

        # The BS is a known anchor: a fixed near-delta component that takes
        # part in the measurement normalization but is never re-estimated.
        bs_mean = np.concatenate([env.bs_position, np.zeros(4)])
        bs_cov = np.diag([1e-6] * 3 + [_STATIC_BLOCK_VAR] * 4)
        self._bs_phd = GmPhd(BS, np.array([1.0]), bs_mean[None, :], bs_cov[None, :, :])

    @property
    def map_types(self):
        return self.params.map_types

    @property
    def weights(self):
        return np.array([p.weight for p in self.particles])

    # ------------------------------------------------------------------ predict

    def predict(self, dt):
        """Propagate particles and maps one step; fold in births constructed
        from the previous scan's measurements (evaluated at the pre-step
        vehicle state each measurement was observed from)."""
        p_s = self.params.survival_prob
        births = None
        if self._pending_births is not None and len(self._pending_births):
            births = [self._birth_components(p.state, self._pending_births)
                      for p in self.particles]
        self._pending_births = None

        states = np.stack([p.state.as_vector() for p in self.particles])
        noise = self._predict_rng.standard_normal(states.shape) @ self._vehicle_noise_sqrt.T
        new_states = step_vehicle_vec(states, dt, noise)

        for i, part in enumerate(self.particles):
            part.state = VehicleState.from_vector(new_states[i])
            for ttype in self.map_types:
                g = part.maps[ttype]
                if ttype == VS and len(g):
                    jac = vs_jacobian_vec(g.m, dt)
                    cov = np.einsum("qij,qjk,qlk->qil", jac, g.P, jac) \
                        + self.noise.vs_process_cov + self.noise.dither_cov
                    g = GmPhd(VS, g.w * p_s, step_vs_vec(g.m, dt), regularize_covs(cov))
                else:
                    g = g.scaled(p_s)
                if births is not None and len(births[i][ttype]):
                    g = concat_mixtures(ttype, [g, births[i][ttype]])
                part.maps[ttype] = g

    # ------------------------------------------------------------------ births

    def birth_phd(self, particle: Particle, Z, env=None):
        """Birth mixtures (one per birthable map type) for a measurement set,
        conditioned on the particle's vehicle state."""
        return self._birth_components(particle.state, _as_measurement_array(Z))

    def _birth_components(self, state: VehicleState, Z):
        R = self.noise.measurement_cov
        sqrt_r = np.sqrt(R.shape[0]) * np.linalg.cholesky(R)
        j_n = Z.shape[0]
        # The measurement itself inverts to the birth mean; cubature points of
        # N(z, R) pushed through the inverse give the position covariance.
        zp = np.concatenate([Z[:, None, :],
                             Z[:, None, :] + sqrt_r.T[None, :, :],
                             Z[:, None, :] - sqrt_r.T[None, :, :]], axis=1)  # (J, 11, 5)
        n_pts = zp.shape[1]

        out = {}
        for ttype in self.map_types:
            pos, valid = invert_positions(
                state.position, state.heading, state.clock_bias,
                zp.reshape(j_n * n_pts, 5), ttype, self.env.bs_position)
            pos = pos.reshape(j_n, n_pts, 3)
            ok = valid.reshape(j_n, n_pts).all(axis=1)
            centers = pos[:, 0]
            # A birth must itself be detectable where it is hypothesised.
            ok &= detection_prob_positions(state.position, centers, ttype, self.env) > 0
            idx = np.flatnonzero(ok)
            if idx.size == 0:
                out[ttype] = GmPhd.empty(ttype)
                continue

            spread = pos[idx, 1:] - centers[idx][:, None, :]
            pos_cov = np.einsum("jpi,jpk->jik", spread, spread) / (n_pts - 1)

            n_b = idx.size
            means = np.zeros((n_b, 7))
            covs = np.zeros((n_b, 7, 7))
            means[:, :3] = centers[idx]
            covs[:, :3, :3] = pos_cov
            if ttype == VS:
                v_std = np.sqrt(self.params.birth_velocity_var)
                means[:, 3:6] = self._birth_rng.standard_normal((n_b, 3)) * v_std
                means[:, 6] = self._birth_rng.uniform(0.0, 2.0 * np.pi, n_b)
                covs[:, 3:6, 3:6] = np.diag(self.params.birth_velocity_var)
                covs[:, 6, 6] = self.params.birth_turn_rate_std**2
            else:
                covs[:, 3:, 3:] = np.eye(4) * _STATIC_BLOCK_VAR
            out[ttype] = GmPhd(ttype, np.full(n_b, self.params.birth_weight), means,
                               regularize_covs(covs))
        return out

    # ------------------------------------------------------------------ correct

    def correct(self, Z):
        """PHD correction of every particle's maps plus particle reweighting.

        The per-measurement normalizer sums the clutter density and the
        detection integrals of every maintained map (static types always; the
        VS map too outside baseline mode). Measurements are retained to seed
        births at the next prediction.
        """
        Z = _as_measurement_array(Z)
        j_n = Z.shape[0]
        c_z = self.params.clutter.density()
        R = self.noise.measurement_cov
        log_lik = np.empty(len(self.particles))

        for i, part in enumerate(self.particles):
            psi = np.full(j_n, c_z)
            detections = {}
            missed = {}
            pd_mass = 0.0
            for ttype in (BS,) + self.map_types:
                g = self._bs_phd if ttype == BS else part.maps[ttype]
                if not len(g):
                    continue
                pd = expected_detection_prob(part.state.position, g, ttype, self.env,
                                             self.params.fov_taper)
                if ttype != BS:
                    missed[ttype] = GmPhd(ttype, (1.0 - pd) * g.w, g.m.copy(), g.P.copy())
                pd_mass += float(pd @ g.w)
                det = pd > 0
                if j_n == 0 or not det.any():
                    continue
                upd = cubature_update_mixture(
                    g.m[det], g.P[det], measurement_fn(part.state, ttype, self.env),
                    Z, R, ANGULAR_COMPONENTS)
                nu = (pd[det] * g.w[det])[:, None] * np.exp(upd.loglik)
                nu[~upd.valid] = 0.0    # failed updates count as undetected
                psi += nu.sum(axis=0)
                if ttype != BS:
                    detections[ttype] = (nu, upd.post_mean, upd.post_cov)

            for ttype in self.map_types:
                pieces = [missed[ttype]] if ttype in missed else []
                if ttype in detections:
                    nu, post_mean, post_cov = detections[ttype]
                    q_d = nu.shape[0]
                    w_det = (nu / psi[None, :]).reshape(q_d * j_n)
                    m_det = post_mean.reshape(q_d * j_n, 7)
                    p_det = np.repeat(post_cov, j_n, axis=0)
                    pieces.append(GmPhd(ttype, w_det, m_det, p_det))
                merged = concat_mixtures(ttype, pieces) if pieces else GmPhd.empty(ttype)
                part.maps[ttype] = prune_merge(
                    merged, self.params.prune_threshold,
                    self.params.merge_threshold, self.params.max_components)

            # psi entries can be exactly zero (unexplained measurement with no
            # clutter); the resulting -inf feeds the degeneracy handling.
            with np.errstate(divide="ignore"):
                if self.params.likelihood == "sum":
                    log_lik[i] = np.log(psi.sum()) if j_n else -np.inf
                else:
                    log_lik[i] = -pd_mass + float(np.sum(np.log(psi))) if j_n else -pd_mass

        self._reweight(log_lik)
        self._pending_births = Z.copy()

    def _reweight(self, log_lik):
        w = self.weights
        finite = np.isfinite(log_lik)
        if not finite.any():
            logger.warning("particle likelihood degeneracy: uniform reweighting")
            new_w = np.full(len(w), 1.0 / len(w))
        else:
            shifted = np.where(finite, log_lik - log_lik[finite].max(), -np.inf)
            new_w = w * np.exp(shifted)
            total = new_w.sum()
            if total <= 0 or not np.isfinite(total):
                logger.warning("particle likelihood degeneracy: uniform reweighting")
                new_w = np.full(len(w), 1.0 / len(w))
            else:
                new_w /= total
        for p, wi in zip(self.particles, new_w):
            p.weight = float(wi)

    # ------------------------------------------------------------------ resample

    def effective_sample_size(self):
        w = self.weights
        return 1.0 / float(np.sum(w**2))

    def resample(self):
        """Systematic resampling when the effective sample size drops below
        half the particle count (strict); resampled particles copy their maps."""
        n = len(self.particles)
        if self.effective_sample_size() >= n / 2.0:
            return False
        w = self.weights
        positions = (self._resample_rng.uniform(0.0, 1.0) + np.arange(n)) / n
        idx = np.searchsorted(np.cumsum(w), positions)
        idx = np.minimum(idx, n - 1)
        self.particles = [self.particles[j].copy() for j in idx]
        for p in self.particles:
            p.weight = 1.0 / n
        return True

    # ------------------------------------------------------------------ estimate

    def estimate(self) -> Estimate:
        """Weighted-mean vehicle state (heading averaged on the circle) and
        thresholded landmark extraction from the highest-weight particle."""
        w = self.weights
        states = np.stack([p.state.as_vector() for p in self.particles])
        mean = w @ states
        heading = np.arctan2(w @ np.sin(states[:, 3]), w @ np.cos(states[:, 3]))
        vehicle = VehicleState(mean[:3], wrap_angle(heading), mean[4], mean[5], mean[6])

        best = self.particles[int(np.argmax(w))]
        landmarks = {}
        for ttype in self.map_types:
            g = best.maps[ttype]
            sel = g.w > self.params.extraction_thresholds[ttype]
            pos = g.m[sel, :3]
            if ttype == VS and len(pos):
                # The vehicle's own uplinked posterior is not a mapped target.
                keep = np.linalg.norm(pos - vehicle.position, axis=1) >= self.env.min_range
                pos = pos[keep]
            landmarks[ttype] = pos
        return Estimate(vehicle, landmarks)
