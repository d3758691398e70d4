"""Gaussian-mixture intensity machinery: components, stacked mixtures, the
spherical-radial cubature measurement update, covariance dithering, and
pruning/merging. Mixtures store stacked arrays so filters can update every
component of a map in one batched call."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import wrap_angle
from .geometry import ANGULAR_COMPONENTS, Environment, Measurement, measure_positions

COV_EIG_FLOOR = 1e-9
LOG_2PI = np.log(2.0 * np.pi)


class UpdateError(RuntimeError):
    """Innovation covariance lost positive definiteness."""


@dataclass
class GaussianComponent:
    weight: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)


@dataclass
class GmPhd:
    """Weighted Gaussian mixture representing one landmark type's intensity.

    Mixture mass (sum of weights) is the expected target count; there is no
    normalization constraint.
    """

    type: str
    w: np.ndarray   # (Q,)
    m: np.ndarray   # (Q, n)
    P: np.ndarray   # (Q, n, n)

    @classmethod
    def empty(cls, ttype, dim=7):
        return cls(ttype, np.zeros(0), np.zeros((0, dim)), np.zeros((0, dim, dim)))

    @classmethod
    def from_components(cls, ttype, components):
        if not components:
            return cls.empty(ttype)
        return cls(
            ttype,
            np.array([c.weight for c in components], dtype=float),
            np.stack([c.mean for c in components]).astype(float),
            np.stack([c.cov for c in components]).astype(float),
        )

    @property
    def components(self):
        return [GaussianComponent(self.w[i], self.m[i].copy(), self.P[i].copy())
                for i in range(len(self.w))]

    @property
    def dim(self):
        return self.m.shape[1]

    def __len__(self):
        return len(self.w)

    def mass(self):
        return float(np.sum(self.w))

    def copy(self):
        return GmPhd(self.type, self.w.copy(), self.m.copy(), self.P.copy())

    def scaled(self, factor):
        return GmPhd(self.type, self.w * factor, self.m.copy(), self.P.copy())


def concat_mixtures(ttype, mixtures):
    mixtures = [g for g in mixtures if len(g)]
    if not mixtures:
        return GmPhd.empty(ttype)
    return GmPhd(
        ttype,
        np.concatenate([g.w for g in mixtures]),
        np.concatenate([g.m for g in mixtures]),
        np.concatenate([g.P for g in mixtures]),
    )


def regularize_covs(P):
    """Symmetrize stacked covariances and floor their eigenvalues."""
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    if P.size == 0:
        return P
    eigval, eigvec = np.linalg.eigh(P)
    eigval = np.maximum(eigval, COV_EIG_FLOOR)
    return np.einsum("...ij,...j,...kj->...ik", eigvec, eigval, eigvec)


def ensure_pd(P):
    """Post-update regularization: symmetrize, and eigenvalue-floor only the
    components that fail a Cholesky probe (healthy ones pass through exactly,
    keeping the update machine-precision for well-conditioned problems)."""
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    if P.size == 0:
        return P
    try:
        np.linalg.cholesky(P)
        return P
    except np.linalg.LinAlgError:
        pass
    out = P.copy()
    for i in range(P.shape[0]):
        try:
            np.linalg.cholesky(P[i])
        except np.linalg.LinAlgError:
            out[i] = regularize_covs(P[i][None])[0]
    return out


def _batched_cholesky(P):
    """Cholesky factors plus a validity mask (failed components flagged)."""
    n = P.shape[0]
    try:
        return np.linalg.cholesky(P), np.ones(n, dtype=bool)
    except np.linalg.LinAlgError:
        L = np.zeros_like(P)
        valid = np.zeros(n, dtype=bool)
        eye = np.eye(P.shape[-1])
        for i in range(n):
            try:
                L[i] = np.linalg.cholesky(P[i])
                valid[i] = True
            except np.linalg.LinAlgError:
                L[i] = eye
        return L, valid


def _unwrap_about(ref, values, angular):
    """Shift angular components of `values` into the branch containing `ref`."""
    out = values.copy()
    ang = out[..., angular]
    ref_ang = ref[..., angular]
    out[..., angular] = ref_ang + wrap_angle(ang - ref_ang)
    return out


@dataclass
class CubatureUpdate:
    """Batched measurement-update products for a stacked mixture.

    post_mean[q, j] is component q updated with measurement j; post_cov is
    measurement-independent. loglik[q, j] is log N(z_j; zhat_q, S_q) with
    angular innovations wrapped. Components whose covariance or innovation
    covariance failed factorization have valid[q] False.
    """

    zhat: np.ndarray      # (Q, dz)
    innov_cov: np.ndarray  # (Q, dz, dz)
    post_mean: np.ndarray  # (Q, J, n)
    post_cov: np.ndarray   # (Q, n, n)
    loglik: np.ndarray     # (Q, J)
    valid: np.ndarray      # (Q,)


def cubature_update_mixture(means, covs, h, Z, R, angular=None) -> CubatureUpdate:
    """Third-degree spherical-radial cubature update of stacked Gaussians.

    means (Q,n), covs (Q,n,n); h maps stacked states (M,n) -> (M,dz);
    Z (J,dz) measurements; R (dz,dz) noise covariance; angular is a boolean
    mask of wrap-around measurement components.
    """
    means = np.atleast_2d(means)
    q_n, n = means.shape
    Z = np.atleast_2d(Z)
    j_n, dz = Z.shape
    angular = np.zeros(dz, dtype=bool) if angular is None else np.asarray(angular)

    L, valid = _batched_cholesky(covs)
    scaled = np.sqrt(n) * np.swapaxes(L, 1, 2)  # (Q, n, n); row i = sqrt(n) * column i of L
    points = np.concatenate([means[:, None, :] + scaled, means[:, None, :] - scaled], axis=1)

    zp = h(points.reshape(q_n * 2 * n, n)).reshape(q_n, 2 * n, dz)
    zp = _unwrap_about(zp[:, :1, :], zp, angular)
    zhat = zp.mean(axis=1)

    dz_pts = zp - zhat[:, None, :]
    dx_pts = points - means[:, None, :]
    S = np.einsum("qij,qik->qjk", dz_pts, dz_pts) / (2 * n) + R
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    C = np.einsum("qij,qik->qjk", dx_pts, dz_pts) / (2 * n)

    L_s, s_valid = _batched_cholesky(S)
    valid = valid & s_valid
    S_safe = np.where(valid[:, None, None], S, np.eye(dz))

    S_inv = np.linalg.inv(S_safe)
    K = np.einsum("qnd,qde->qne", C, S_inv)
    post_cov = covs - np.einsum("qnd,qde,qme->qnm", K, S_safe, K)
    post_cov = ensure_pd(post_cov)

    innov = Z[None, :, :] - zhat[:, None, :]
    innov[..., angular] = wrap_angle(innov[..., angular])
    quad = np.einsum("qjd,qde,qje->qj", innov, S_inv, innov)
    diag = np.einsum("qii->qi", np.where(valid[:, None, None], L_s, np.eye(dz)))
    logdet = 2.0 * np.sum(np.log(diag), axis=1)
    loglik = -0.5 * (quad + logdet[:, None] + dz * LOG_2PI)

    post_mean = means[:, None, :] + np.einsum("qnd,qjd->qjn", K, innov)
    return CubatureUpdate(zhat, S, post_mean, post_cov, loglik, valid)


def measurement_fn(vehicle, ttype, env: Environment):
    """Measurement map h for stacked target states of one landmark type."""
    def h(states):
        return measure_positions(
            vehicle.position, vehicle.heading, vehicle.clock_bias,
            states[:, :3], ttype, env.bs_position,
        )
    return h


def ckf_update(comp: GaussianComponent, z, vehicle, R, env: Environment,
               ttype=None, h=None):
    """Cubature update of one component against one measurement.

    Returns (updated component, predictive likelihood q(z)); the component
    weight is left unchanged (callers reweight). Raises UpdateError when the
    innovation covariance is not positive definite.
    """
    if h is None:
        h = measurement_fn(vehicle, ttype, env)
        angular = ANGULAR_COMPONENTS
    else:
        angular = None
    arr = z.as_array() if isinstance(z, Measurement) else np.asarray(z, dtype=float)
    res = cubature_update_mixture(comp.mean[None, :], comp.cov[None, :, :], h,
                                  arr[None, :], R, angular)
    if not res.valid[0]:
        raise UpdateError("innovation covariance not positive definite")
    updated = GaussianComponent(comp.weight, res.post_mean[0, 0], res.post_cov[0])
    return updated, float(np.exp(res.loglik[0, 0]))


def dither(comp: GaussianComponent, dither_cov) -> GaussianComponent:
    """Additive covariance regularization; mean and weight untouched."""
    return GaussianComponent(comp.weight, comp.mean.copy(), comp.cov + dither_cov)


def prune_merge(phd: GmPhd, prune_threshold, merge_threshold, max_components) -> GmPhd:
    """Vo-style mixture reduction.

    Components with weight < prune_threshold are dropped; survivors within
    merge_threshold squared Mahalanobis distance (in the candidate's own
    covariance) of the heaviest remaining component are moment-matched into
    it; the result is truncated to max_components by weight. Merging itself
    conserves mass.
    """
    keep = phd.w >= prune_threshold
    w, m, P = phd.w[keep], phd.m[keep], phd.P[keep]
    n = len(w)
    if n == 0:
        return GmPhd.empty(phd.type, phd.dim)

    out_w, out_m, out_P = [], [], []
    alive = np.ones(n, dtype=bool)
    masked_w = w.copy()
    while alive.any():
        j = int(np.argmax(masked_w))
        idx = np.flatnonzero(alive)
        diff = m[idx] - m[j]
        solved = np.linalg.solve(P[idx], diff[..., None])[..., 0]
        md = np.einsum("ij,ij->i", diff, solved)
        group = idx[md <= merge_threshold]

        gw = w[group]
        total = gw.sum()
        mean = gw @ m[group] / total
        spread = m[group] - mean
        cov = np.einsum("i,ijk->jk", gw, P[group]) / total \
            + np.einsum("i,ij,ik->jk", gw, spread, spread) / total
        out_w.append(total)
        out_m.append(mean)
        out_P.append(cov)
        alive[group] = False
        masked_w[group] = -np.inf

    trunc = np.argsort(out_w)[::-1][:max_components]
    return GmPhd(
        phd.type,
        np.array(out_w)[trunc],
        np.stack(out_m)[trunc],
        np.stack(out_P)[trunc],
    )
