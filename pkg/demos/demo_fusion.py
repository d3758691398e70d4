"""Fused-map mechanics in isolation: proximity-gated arithmetic averaging,
ego-posterior placement, uncertainty-weighted merging of moving-scatterer
components, and the accumulated-FOV rule that decays stale false alarms.

Run: python3 demos/demo_fusion.py
"""

import numpy as np

from coopslam import Environment, FusionParams, fuse_static, fuse_vs, place_ego
from coopslam.fusion import AccumulatedFov, EgoPosterior
from coopslam.gmphd import GaussianComponent, GmPhd


def vs_component(weight, position, velocity, pos_var=1.0, vel_var=1.0):
    mean = np.zeros(7)
    mean[:3] = position
    mean[3:6] = velocity
    return GaussianComponent(weight, mean, np.diag([pos_var] * 3 + [vel_var] * 3 + [0.1]))


def show(tag, phd):
    print(f"  {tag}:")
    for i in range(len(phd)):
        print(f"    w={phd.w[i]:.3f} pos={np.round(phd.m[i, :3], 1)} "
              f"vel={np.round(phd.m[i, 3:6], 1)}")


env = Environment(bs_position=[0.0, 0.0, 40.0])
params = FusionParams()

# --- ego placement -----------------------------------------------------------
print("ego placement: the uplinked map's estimate of oneself is replaced by")
print("the (far more accurate) self posterior\n")
uplink = GmPhd.from_components("VS", [
    vs_component(0.8, [10.5, 0.3, 0.0], [0.0, 18.0, 0.0], pos_var=4.0, vel_var=50.0),
    vs_component(0.9, [60.0, 5.0, 0.0], [1.0, 15.0, 0.0], pos_var=4.0, vel_var=50.0),
])
ego = EgoPosterior(np.array([10.0, 0.0, 0.0, 0.0, 19.1, 0.0, 0.3]),
                   np.diag([0.1] * 3 + [0.05] * 3 + [0.01]))
show("uplinked VS map (self estimate + another vehicle)", uplink)
placed = place_ego(uplink, ego, params.t_md_l)
show("after ego placement", placed)

# --- uncertainty-weighted merge ----------------------------------------------
print("\nmatched components merge with inverse-uncertainty weights:\n")
sharp = GmPhd.from_components("VS", [vs_component(1.0, [30.0, 0, 0], [5.0, 0, 0],
                                                  pos_var=0.5, vel_var=0.5)])
blurry = GmPhd.from_components("VS", [vs_component(1.0, [30.8, 0, 0], [5.5, 0, 0],
                                                   pos_var=4.0, vel_var=4.0)])
fused = fuse_vs(sharp, blurry, AccumulatedFov(env), params)
show("BS (sharp) + uplink (blurry)", fused)

# --- accumulated-FOV false-alarm decay ---------------------------------------
print("\na planted false alarm inside the accumulated FOV decays under")
print("repeated fusion; outside the FOV it is preserved:\n")
for origin, label in [([20.0, 0.0, 0.0], "inside FOV"), ([500.0, 0.0, 0.0], "outside FOV")]:
    fov = AccumulatedFov(env)
    fov.add_pose(np.asarray(origin))
    ghost = GmPhd.from_components("SP", [vs_component(1.0, [30.0, 0, 0], [0, 0, 0])])
    weights = []
    for _ in range(3):
        ghost = fuse_static(ghost, GmPhd.empty("SP"), fov, params)
        weights.append(round(float(ghost.w.max()), 3) if len(ghost) else 0.0)
    print(f"  {label}: weight after each epoch -> {weights}")
