import numpy as np, time
from geotrack import algebra as ga, sphere as sp, lift as lf, references as refs, sim, control as ctl
from geotrack import navigation as nav

rng = np.random.default_rng(5)
so3 = ga.SO(3)

# ---- group error-dynamics oracle on the robot plant, h = 1e-4
plant = sim.default_robot_plant()
cfg = sim.default_robot_controller(plant)
tag = plant.tag
ref = refs.ProductScrew()
L = lf.lift_on_group(ref, (0.0, 1.5))
g0 = np.zeros((2, 7, 7)); xi0 = np.empty((2, 6))
for i in range(2):
    g0[i] = np.eye(7)
    g0[i, :3, 3] = rng.uniform(-1, 1, 3)
    g0[i, 4:7, 4:7] = sim.sample_haar_rotation(rng)
    xi0[i] = sim.sample_coord_ball(rng, 6, 1.5)
h = 1e-4
recs = sim.rollout_group_batch(plant, L, cfg, g0, xi0, h=h, horizon=1.0,
                               record_stride=1, threshold=1e-2)
I = plant.inertia
D = cfg.dissipation.matrix
worst = 0.0
for r in recs:
    xi_e = r.state["xi_e"]; e = r.state["e"]
    for i in range(1, len(xi_e) - 1, 23):
        fd = (xi_e[i + 1] - xi_e[i - 1]) / (2 * h)
        mom = I.matrix @ xi_e[i]
        rhs = I.sharp_coords(ga.ad_star_coords(tag, xi_e[i], mom)
                             - cfg.navigation.zeta_coords(e[i]) - D @ xi_e[i])
        res = np.linalg.norm(fd - rhs) / (1.0 + xi_e[i] @ xi_e[i])
        worst = max(worst, res)
print("group error-dynamics oracle worst residual:", worst)

# ---- abelian reduction: R^3 control equals PD + feedforward at machine precision
t3 = ga.Translation(3)
It = ga.AlgebraMetric(t3, 1.7 * np.eye(3))   # mass 1.7
Dt = ga.AlgebraMetric(t3, np.diag([2.0, 3.0, 4.0]))
Kx = np.diag([1.0, 2.0, 0.5])
ctl_cfg = ctl.GroupControllerConfig(It, Dt, nav.translation_navigation(Kx))
worst = 0.0
for _ in range(1000):
    x, xd = rng.normal(size=3), rng.normal(size=3)
    v, vd, ad_ = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    tau = ctl.group_control_raw(ctl_cfg, t3.exp(xd), vd, ad_, t3.exp(x), v)
    classic = -2.0 * Kx @ (x - xd) - Dt.matrix @ (v - vd) + 1.7 * ad_
    worst = max(worst, np.max(np.abs(tau - classic)))
print("abelian PD equivalence worst:", worst)

# ---- reduction consistency: full SO(3) axisymmetric body vs reduced S^2
j1, j3 = 1.0, 0.6
ref8 = refs.FigureEight()
L8 = lf.horizontal_lift(ref8, (0.0, 10.0))
scfg = ctl.SphereControllerConfig(k_p=4.0, k_d=4.0, metric_scale=j1)
e3 = np.array([0.0, 0, 1.0])
R0 = sim.sample_haar_rotation(rng)
om_perp = np.array([0.4, -0.8, 0.0])  # Omega_3(0) = 0

def torque(t, g, om):
    q = g[..., :, 2]
    v = np.einsum("...ij,...j->...i", g, np.cross(om, e3))
    Rd, Rdot, Rddot = L8.sample(t)
    row = ctl.sphere_control_raw(scfg, Rd, Rdot, Rddot, q, v)
    w = np.einsum("...ji,...j->...i", g, row)
    return np.cross(e3, w)

gp = sim.GroupPlant(so3, ga.AlgebraMetric(so3, np.diag([j1, j1, j3])))
t0 = time.perf_counter()
tt, gs, oms = sim.simulate_group(gp, torque, R0, om_perp, 1e-3, 10000)
print("full-model rollout:", time.perf_counter() - t0, "s")
print("Omega_3 max:", np.max(np.abs(oms[:, 2])))
y = gs[:, :, 2]
# reduced rollout from the matching initial state
q0 = R0 @ e3
v0 = R0 @ np.cross(om_perp, e3)
splant = sim.SpherePlant(2, metric_scale=j1)
def sphere_policy(t, qq, vv):
    Rd, Rdot, Rddot = L8.sample(t)
    return ctl.sphere_control_raw(scfg, Rd, Rdot, Rddot, qq, vv)
_, qs, vs = sim.simulate_sphere(splant, sphere_policy, q0, v0, 1e-3, 10000)
print("output match max:", np.max(np.abs(y - qs)))

# ---- lift-choice independence: constant stabilizer offset
split = sp.reductive_split(2)
f0 = split.embed_fiber_element(ga.SO(2).exp(np.array([1.1])))
class OffsetLift:
    def __init__(self, L, f): self.L, self.f = L, f
    def sample(self, t):
        g, gd, gdd = self.L.sample(t)
        return g @ self.f, gd @ self.f, gdd @ self.f
L_off = OffsetLift(L8, f0)
q0 = np.array([-0.3, 0.8, np.sqrt(1-0.09-0.64)])
v0 = np.array([0.7, 0.2, 0.0]); v0 -= (q0 @ v0) * q0
def pol_a(t, qq, vv):
    Rd, Rdot, Rddot = L8.sample(t)
    return ctl.sphere_control_raw(scfg, Rd, Rdot, Rddot, qq, vv)
def pol_b(t, qq, vv):
    Rd, Rdot, Rddot = L_off.sample(t)
    return ctl.sphere_control_raw(scfg, Rd, Rdot, Rddot, qq, vv)
_, qa, va = sim.simulate_sphere(splant, pol_a, q0, v0, 1e-3, 10000)
_, qb, vb = sim.simulate_sphere(splant, pol_b, q0, v0, 1e-3, 10000)
print("lift-choice (constant offset) q deviation:", np.max(np.abs(qa - qb)))

# ---- time-varying stabilizer perturbation: expected NOT to agree exactly
class WobbleLift:
    def __init__(self, L): self.L = L
    def sample(self, t):
        t = np.asarray(t, dtype=float)
        g, gd, gdd = self.L.sample(t)
        th = 0.5 * np.sin(0.9 * t); thd = 0.45 * np.cos(0.9 * t); thdd = -0.405 * np.sin(0.9 * t)
        z = np.zeros_like(th)
        f = split.embed_fiber_element(ga.SO(2).exp(np.stack([th], -1)))
        E = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
        fd = (thd[..., None, None]) * (E @ f)
        fdd = (thdd[..., None, None]) * (E @ f) + (thd[..., None, None] ** 2) * (E @ E @ f)
        return g @ f, gd @ f + g @ fd, gdd @ f + 2 * (gd @ fd) + g @ fdd
L_wob = WobbleLift(L8)
def pol_c(t, qq, vv):
    Rd, Rdot, Rddot = L_wob.sample(t)
    return ctl.sphere_control_raw(scfg, Rd, Rdot, Rddot, qq, vv)
_, qc, vc = sim.simulate_sphere(splant, pol_c, q0, v0, 1e-3, 10000)
dev = np.max(np.abs(qa - qc))
print("lift-choice (time-varying wobble) q deviation:", dev, " -> still converges:", np.max(np.abs(qc[-1]-qa[-1])))
err_end = np.linalg.norm(qc[-1] - L8.point(10.0))
print("wobble-lift rollout final distance to reference:", err_end)
