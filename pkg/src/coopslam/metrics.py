"""Set-estimation and trajectory error metrics: GOSPA with its
localization / missed / false decomposition, and per-timestep location RMSE
across Monte Carlo runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class GospaParams:
    """Cutoff c [m], order p, and cardinality factor alpha (2 = standard
    decomposition into localization / missed / false)."""

    c: float = 20.0
    p: float = 2.0
    alpha: float = 2.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("cutoff must be positive")
        if self.p < 1:
            raise ValueError("order must be >= 1")
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")


class GospaResult(NamedTuple):
    distance: float
    localization: float
    missed: float
    false: float


def gospa(estimates, truths, params: GospaParams = None) -> GospaResult:
    """GOSPA distance between position sets with optimal assignment.

    Assigned pairs farther apart than the cutoff are counted as one missed
    target plus one false estimate, per the alpha = 2 decomposition. Each
    returned component is reported on the distance scale (its p-th root), so
    distance**p == localization**p + missed**p + false**p.
    """
    params = params or GospaParams()
    est = np.atleast_2d(np.asarray(estimates, dtype=float)) if len(estimates) else np.zeros((0, 3))
    tru = np.atleast_2d(np.asarray(truths, dtype=float)) if len(truths) else np.zeros((0, 3))
    c, p = params.c, params.p
    card_penalty = c**p / params.alpha

    n_est, n_tru = est.shape[0], tru.shape[0]
    if n_est == 0 or n_tru == 0:
        miss = card_penalty * n_tru
        false = card_penalty * n_est
        return GospaResult((miss + false) ** (1 / p), 0.0, miss ** (1 / p), false ** (1 / p))

    dists = np.linalg.norm(tru[:, None, :] - est[None, :, :], axis=2)
    costs = np.minimum(dists, c) ** p
    rows, cols = linear_sum_assignment(costs)

    matched = dists[rows, cols] < c
    loc = float(np.sum(dists[rows, cols][matched] ** p))
    n_matched = int(np.sum(matched))
    miss = card_penalty * (n_tru - n_matched)
    false = card_penalty * (n_est - n_matched)
    total = loc + miss + false
    return GospaResult(total ** (1 / p), loc ** (1 / p), miss ** (1 / p), false ** (1 / p))


def rmse(trajectory_estimates, trajectory_truths):
    """Per-timestep RMSE of Euclidean location error over Monte Carlo runs.

    Inputs are (runs, steps, dim) stacks (a single run may be passed as
    (steps, dim)); lengths must agree.
    """
    est = np.asarray(trajectory_estimates, dtype=float)
    tru = np.asarray(trajectory_truths, dtype=float)
    if est.ndim == 2:
        est = est[None, ...]
        tru = tru[None, ...]
    if est.shape != tru.shape:
        raise ValueError(f"trajectory shapes differ: {est.shape} vs {tru.shape}")
    sq_err = np.sum((est - tru) ** 2, axis=-1)
    return np.sqrt(np.mean(sq_err, axis=0))
