import numpy as np
import pytest

from coopslam.dynamics import SP, Target, VehicleState
from coopslam.geometry import Environment, Plane, measure
from coopslam.gmphd import (
    GaussianComponent,
    GmPhd,
    UpdateError,
    ckf_update,
    dither,
    prune_merge,
)

T_D = np.diag([9.0, 9.0, 0.09, 5.0, 5.0, 0.09, 0.18])


def random_spd(rng, n, scale=1.0):
    a = rng.normal(size=(n, n))
    return scale * (a @ a.T + n * np.eye(n))


@pytest.fixture
def env():
    return Environment(bs_position=[0.0, 0.0, 40.0],
                       reflecting_surfaces=[Plane([1, 0, 0], 80)])


class TestCkf:
    def test_linear_map_reproduces_kalman_update(self):
        # Cubature is exact for linear h, so the CKF must match the
        # closed-form Kalman update.
        rng = np.random.default_rng(1)
        H = rng.normal(size=(5, 7))
        R = random_spd(rng, 5, 0.1)
        P = random_spd(rng, 7)
        m = rng.normal(size=7)
        z = rng.normal(size=5)
        comp = GaussianComponent(0.7, m, P)

        updated, qz = ckf_update(comp, z, None, R, None, h=lambda x: x @ H.T)

        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        mean_kf = m + K @ (z - H @ m)
        cov_kf = P - K @ S @ K.T
        innov = z - H @ m
        q_kf = np.exp(-0.5 * (innov @ np.linalg.solve(S, innov)
                              + np.linalg.slogdet(S)[1] + 5 * np.log(2 * np.pi)))

        assert np.allclose(updated.mean, mean_kf, atol=1e-9)
        assert np.allclose(updated.cov, cov_kf, atol=1e-9)
        assert np.isclose(qz, q_kf, rtol=1e-9)
        assert updated.weight == comp.weight

    def test_repeated_noiseless_updates_contract(self, env):
        vehicle = VehicleState([0.0, 0.0, 0.0], 0.3, 5.0, 0.1, 300.0)
        truth = Target([20.0, 15.0, 5.0], type=SP)
        z = measure(vehicle, truth, env)
        R = np.diag([0.1, 0.01, 0.01, 0.01, 0.01]) ** 2

        mean = np.zeros(7)
        mean[:3] = truth.position + [3.0, -2.0, 1.0]
        cov = np.diag([25.0, 25.0, 25.0, 1e-6, 1e-6, 1e-6, 1e-6])
        comp = GaussianComponent(1.0, mean, cov)

        errors = [np.linalg.norm(comp.mean[:3] - truth.position)]
        for _ in range(20):
            comp, _ = ckf_update(comp, z, vehicle, R, env, ttype=SP)
            errors.append(np.linalg.norm(comp.mean[:3] - truth.position))
        assert all(b < a + 1e-12 for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 0.05 * errors[0]

    def test_true_component_outscores_displaced(self, env):
        rng = np.random.default_rng(2)
        R = np.diag([0.1, 0.01, 0.01, 0.01, 0.01]) ** 2
        wins = 0
        for _ in range(25):
            vehicle = VehicleState(rng.uniform(-40, 40, 3) * [1, 1, 0],
                                   rng.uniform(-np.pi, np.pi), 5.0, 0.1, 300.0)
            truth = Target(rng.uniform(-60, 60, 3), type=SP)
            z = measure(vehicle, truth, env)
            cov = np.diag([16.0, 16.0, 16.0, 1e-6, 1e-6, 1e-6, 1e-6])
            mean_true = np.zeros(7)
            mean_true[:3] = truth.position
            offset = rng.normal(size=3)
            offset = 20.0 * offset / np.linalg.norm(offset)
            mean_far = mean_true.copy()
            mean_far[:3] += offset
            _, q_true = ckf_update(GaussianComponent(1, mean_true, cov), z,
                                   vehicle, R, env, ttype=SP)
            _, q_far = ckf_update(GaussianComponent(1, mean_far, cov), z,
                                  vehicle, R, env, ttype=SP)
            wins += q_true > q_far
        assert wins == 25

    def test_nonpositive_innovation_raises(self):
        comp = GaussianComponent(1.0, np.zeros(7), np.eye(7))
        bad_r = -10.0 * np.eye(5)  # forces an indefinite innovation covariance
        with pytest.raises(UpdateError):
            ckf_update(comp, np.zeros(5), None, bad_r, None,
                       h=lambda x: x[:, :5] * 1e-3)


class TestDither:
    def test_zero_is_identity(self):
        comp = GaussianComponent(0.3, np.arange(7.0), np.eye(7))
        out = dither(comp, np.zeros((7, 7)))
        assert np.array_equal(out.cov, comp.cov)
        assert np.array_equal(out.mean, comp.mean)
        assert out.weight == comp.weight

    def test_trace_increase_matches_dither_trace(self):
        comp = GaussianComponent(1.0, np.zeros(7), np.eye(7))
        out = dither(comp, T_D)
        assert np.isclose(np.trace(out.cov) - np.trace(comp.cov), np.trace(T_D))
        assert np.isclose(np.trace(T_D), 28.36)

    def test_eigenvalues_never_decrease(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            cov = random_spd(rng, 7)
            out = dither(GaussianComponent(1, np.zeros(7), cov), T_D)
            before = np.sort(np.linalg.eigvalsh(cov))
            after = np.sort(np.linalg.eigvalsh(out.cov))
            assert np.all(after >= before - 1e-10)


def mixture(entries):
    return GmPhd.from_components(
        SP, [GaussianComponent(w, m, P) for w, m, P in entries])


class TestPruneMerge:
    def test_prune_drops_light_components(self):
        phd = mixture([(0.05, np.zeros(7), np.eye(7)),
                       (0.5, np.ones(7), np.eye(7))])
        out = prune_merge(phd, 0.1, 4.0, 100)
        assert len(out) == 1
        assert np.isclose(out.w[0], 0.5)

    def test_prune_threshold_is_strict(self):
        phd = mixture([(0.1, np.zeros(7), np.eye(7))])
        assert len(prune_merge(phd, 0.1, 4.0, 100)) == 1

    def test_coincident_merge(self):
        m = np.arange(7.0)
        phd = mixture([(0.3, m, 2 * np.eye(7)), (0.3, m, 2 * np.eye(7))])
        out = prune_merge(phd, 0.0, 4.0, 100)
        assert len(out) == 1
        assert np.isclose(out.w[0], 0.6)
        assert np.allclose(out.m[0], m)
        assert np.allclose(out.P[0], 2 * np.eye(7))

    def test_moment_match_hand_oracle(self):
        # Scalar case embedded in the first coordinate: equal weights at 0 and
        # 2 merge to mean 1 with spread term +1 on that variance.
        m1, m2 = np.zeros(7), np.zeros(7)
        m2[0] = 2.0
        phd = mixture([(1.0, m1, np.eye(7)), (1.0, m2, np.eye(7))])
        out = prune_merge(phd, 0.0, 10.0, 100)
        assert len(out) == 1
        assert np.isclose(out.w[0], 2.0)
        assert np.isclose(out.m[0, 0], 1.0)
        assert np.isclose(out.P[0, 0, 0], 2.0)  # 1 (avg cov) + 1 (spread)
        assert np.allclose(np.diag(out.P[0])[1:], 1.0)

    def test_mass_bookkeeping_exact(self):
        rng = np.random.default_rng(4)
        phd = mixture([(rng.uniform(0.001, 2.0), rng.normal(size=7) * 20,
                        random_spd(rng, 7)) for _ in range(40)])
        prune_t = 0.05
        out = prune_merge(phd, prune_t, 4.0, 100)
        pruned_mass = phd.w[phd.w < prune_t].sum()
        assert np.isclose(out.mass(), phd.mass() - pruned_mass, atol=1e-12)

    def test_truncation_keeps_heaviest(self):
        phd = mixture([(w, np.full(7, 100.0 * i), np.eye(7))
                       for i, w in enumerate([0.9, 0.5, 0.2, 0.1])])
        out = prune_merge(phd, 0.0, 4.0, 2)
        assert len(out) == 2
        assert np.allclose(np.sort(out.w)[::-1], [0.9, 0.5])

    def test_merge_preserves_first_two_moments(self):
        rng = np.random.default_rng(5)
        comps = [(rng.uniform(0.5, 1.0), rng.normal(size=7) * 0.1, random_spd(rng, 7))
                 for _ in range(5)]
        phd = mixture(comps)
        out = prune_merge(phd, 0.0, 1e9, 100)  # force a single merge group
        assert len(out) == 1
        w = np.array([c[0] for c in comps])
        means = np.stack([c[1] for c in comps])
        covs = np.stack([c[2] for c in comps])
        mean = w @ means / w.sum()
        diff = means - mean
        cov = (np.einsum("i,ijk->jk", w, covs)
               + np.einsum("i,ij,ik->jk", w, diff, diff)) / w.sum()
        assert np.isclose(out.w[0], w.sum(), atol=1e-10)
        assert np.allclose(out.m[0], mean, atol=1e-10)
        assert np.allclose(out.P[0], cov, atol=1e-10)
