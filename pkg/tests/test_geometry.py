import numpy as np
import pytest

from coopslam.dynamics import BS, SP, VA, VS, Target, VehicleState, wrap_angle
from coopslam.geometry import (
    Environment,
    GeometryError,
    InversionError,
    Measurement,
    Plane,
    detection_probability,
    incidence_point,
    invert_measurement,
    measure,
    mirror_bs,
)


@pytest.fixture
def env():
    return Environment(
        bs_position=[0.0, 0.0, 40.0],
        reflecting_surfaces=[Plane([1, 0, 0], 80), Plane([1, 0, 0], -80),
                             Plane([0, 1, 0], 80), Plane([0, 1, 0], -80)],
        sp_positions=[[55.0, 55.0, 10.0]],
    )


def vehicle(position=(60.73, 0.0, 0.0), heading=np.pi / 2, bias=300.0):
    return VehicleState(np.asarray(position, dtype=float), heading, 19.08, np.pi / 10, bias)


class TestMirror:
    def test_axis_aligned_plane(self):
        assert np.allclose(mirror_bs([0, 0, 40], Plane([1, 0, 0], 70)), [140, 0, 40])

    def test_ground_plane_sign_flip(self):
        assert np.allclose(mirror_bs([0, 0, 40], Plane([0, 0, 1], 0)), [0, 0, -40])

    def test_oblique_plane(self):
        # Householder oracle: p - 2 (n.p - d) n with n = (1,1,0)/sqrt(2), d = 0.
        assert np.allclose(mirror_bs([10, 0, 40], Plane([1, 1, 0], 0)), [0, -10, 40])

    def test_involution_random_planes(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            plane = Plane(rng.normal(size=3), rng.normal() * 10)
            p = rng.normal(size=3) * 50
            assert np.allclose(mirror_bs(mirror_bs(p, plane), plane), p, atol=1e-12)


class TestMeasure:
    def test_bs_toa_euclidean_oracle(self, env):
        z = measure(vehicle(), Target(env.bs_position, type=BS), env)
        assert abs(z.toa - (np.hypot(60.73, 40.0) + 300.0)) < 1e-9  # 372.7196 m

    def test_bs_angles(self, env):
        z = measure(vehicle(), Target(env.bs_position, type=BS), env)
        # Global direction to the BS is -x and upward; vehicle heading pi/2.
        assert abs(wrap_angle(z.aoa_az - (np.pi - np.pi / 2))) < 1e-12
        assert z.aoa_el > 0
        assert abs(z.aod_az) < 1e-12  # departure from the BS toward +x
        assert z.aod_el < 0

    def test_sp_on_los_shares_bs_aod(self, env):
        # Collinearity: a scatterer on the BS-vehicle segment departs the BS
        # in the direction of the vehicle.
        veh = vehicle()
        sp_pos = env.bs_position + 0.6 * (veh.position - env.bs_position)
        z_sp = measure(veh, Target(sp_pos, type=SP), env)
        z_bs = measure(veh, Target(env.bs_position, type=BS), env)
        assert abs(wrap_angle(z_sp.aod_az - z_bs.aod_az)) < 1e-12
        assert abs(z_sp.aod_el - z_bs.aod_el) < 1e-12

    def test_va_aoa_in_vehicle_frame(self, env):
        veh = vehicle()
        z = measure(veh, Target([140.0, 0.0, 40.0], type=VA), env)
        # Hypothetical VA on the +x axis relative to the vehicle's lateral
        # plane: global azimuth 0 for the planar part, minus heading pi/2.
        delta = np.array([140.0, 0.0, 40.0]) - veh.position
        expected = wrap_angle(np.arctan2(delta[1], delta[0]) - veh.heading)
        assert abs(z.aoa_az - expected) < 1e-12
        assert abs(z.aoa_az - (-np.pi / 2)) < 1e-12

    def test_va_path_length_equivalence(self, env):
        # Reflection preserves path length: BS -> incidence -> vehicle equals
        # the VA -> vehicle distance.
        rng = np.random.default_rng(5)
        surface = env.reflecting_surfaces[0]
        va = mirror_bs(env.bs_position, surface)
        for _ in range(50):
            veh = vehicle(position=rng.uniform(-60, 60, size=3) * [1, 1, 0],
                          heading=rng.uniform(-np.pi, np.pi))
            q, t = incidence_point(va, veh.position, surface)
            assert 0 <= t <= 1
            path = np.linalg.norm(env.bs_position - q) + np.linalg.norm(q - veh.position)
            z = measure(veh, Target(va, type=VA), env)
            assert abs(z.toa - veh.clock_bias - path) < 1e-9

    def test_va_aod_points_at_incidence(self, env):
        surface = env.reflecting_surfaces[0]
        va = mirror_bs(env.bs_position, surface)
        veh = vehicle(position=[30.0, -20.0, 0.0])
        q, _ = incidence_point(va, veh.position, surface)
        z = measure(veh, Target(va, type=VA), env)
        d = q - env.bs_position
        assert abs(wrap_angle(z.aod_az - np.arctan2(d[1], d[0]))) < 1e-9

    def test_degenerate_geometry_raises(self, env):
        veh = vehicle(position=[10.0, 0.0, 0.0])
        with pytest.raises(GeometryError):
            measure(veh, Target([10.0, 0.0, 0.0], type=SP), env)

    def test_angle_ranges(self, env):
        rng = np.random.default_rng(9)
        for ttype in (BS, VA, SP, VS):
            for _ in range(50):
                veh = vehicle(position=rng.uniform(-70, 70, 3) * [1, 1, 0],
                              heading=rng.uniform(-4 * np.pi, 4 * np.pi))
                target_pos = rng.uniform(-150, 150, 3)
                tgt = Target(target_pos, type=ttype) if ttype != VS \
                    else Target(target_pos, [1, 1, 0], 0.1, VS)
                z = measure(veh, tgt, env)
                assert -np.pi < z.aoa_az <= np.pi and -np.pi < z.aod_az <= np.pi
                assert -np.pi / 2 <= z.aoa_el <= np.pi / 2
                assert -np.pi / 2 <= z.aod_el <= np.pi / 2
                assert z.toa >= 0


class TestInvert:
    def test_round_trip_all_types(self, env):
        rng = np.random.default_rng(17)
        for ttype in (BS, VA, SP, VS):
            for _ in range(50):
                veh = vehicle(position=rng.uniform(-50, 50, 3) * [1, 1, 0],
                              heading=rng.uniform(-np.pi, np.pi))
                pos = rng.uniform(-120, 120, 3)
                if ttype in (SP, VS) and np.linalg.norm(pos - veh.position) < 1.0:
                    continue
                tgt = Target(pos, type=ttype) if ttype != VS else Target(pos, [1, 0, 0], 0.0, VS)
                z = measure(veh, tgt, env)
                recovered = invert_measurement(veh, z, ttype, env)
                assert np.linalg.norm(recovered - pos) < 1e-6

    def test_va_ray_arithmetic(self, env):
        veh = VehicleState([0.0, 0.0, 0.0], 0.0, 1.0, 0.0, 300.0)
        z = Measurement(380.0, 0.0, 0.0, 0.0, 0.0)
        assert np.allclose(invert_measurement(veh, z, VA, env), [80, 0, 0])

    def test_sp_recovery_against_bisection_oracle(self, env):
        veh = vehicle()
        truth = np.array([55.0, 55.0, 10.0])
        z = measure(veh, Target(truth, type=SP), env)

        # Oracle: bisect the ray parameter on the path-length residual.
        d = z.toa - veh.clock_bias
        az = z.aoa_az + veh.heading
        u = np.array([np.cos(z.aoa_el) * np.cos(az),
                      np.cos(z.aoa_el) * np.sin(az), np.sin(z.aoa_el)])

        def residual(s):
            x = veh.position + s * u
            return np.linalg.norm(env.bs_position - x) + s - d

        lo, hi = 1e-6, d
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if residual(mid) > 0:
                hi = mid
            else:
                lo = mid
        oracle = veh.position + 0.5 * (lo + hi) * u

        recovered = invert_measurement(veh, z, SP, env)
        assert np.linalg.norm(oracle - truth) < 1e-6
        assert np.linalg.norm(recovered - truth) < 1e-6

    def test_inconsistent_measurement_raises(self, env):
        veh = vehicle()
        # TOA below the direct BS-vehicle distance cannot come from a scatterer.
        z = Measurement(veh.clock_bias + 10.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(InversionError):
            invert_measurement(veh, z, SP, env)


class TestDetection:
    def test_sp_inside_fov(self, env):
        veh = vehicle(position=[0.0, 0.0, 0.0])
        assert detection_probability(veh, Target([49.0, 0, 0], type=SP), env) == 0.95

    def test_vs_outside_fov(self, env):
        veh = vehicle(position=[0.0, 0.0, 0.0])
        tgt = Target([51.0, 0, 0], [1, 0, 0], 0.0, VS)
        assert detection_probability(veh, tgt, env) == 0.0

    def test_bs_any_range(self, env):
        veh = vehicle(position=[500.0, 0.0, 0.0])
        assert detection_probability(veh, Target(env.bs_position, type=BS), env) == 0.95

    def test_blind_zone(self, env):
        veh = vehicle(position=[0.0, 0.0, 0.0])
        tgt = Target([0.2, 0.0, 0.0], [1, 0, 0], 0.0, VS)
        assert detection_probability(veh, tgt, env) == 0.0
