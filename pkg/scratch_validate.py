import numpy as np, time
from geotrack import algebra as ga, sphere as sp, lift as lf, references as refs, sim, control as ctl

rng = np.random.default_rng(3)
so3 = ga.SO(3)

# ---- 1. sphere plant free geodesic oracle
plant = sim.SpherePlant(n=2, metric_scale=1.0)
q0 = np.array([1.0, 0, 0]); v0 = np.array([0, 1.0, 0])
t, qs, vs = sim.simulate_sphere(plant, np.zeros(3), q0, v0, 1e-3, 1000)
exact = np.cos(1.0) * q0 + np.sin(1.0) * v0
print("geodesic err at t=1:", np.max(np.abs(qs[-1] - exact)))

# ---- 2. free rigid body conservation (tau=0, I=diag(1,2,3)) over t=10
gp = sim.GroupPlant(so3, ga.AlgebraMetric(so3, np.diag([1.0, 2, 3])))
om0 = np.array([0.3, 1.2, -0.7])
t0 = time.perf_counter()
t, gs, oms = sim.simulate_group(gp, np.zeros(3), np.eye(3), om0, 1e-3, 10000)
el = time.perf_counter() - t0
I = np.diag([1.0, 2, 3])
E = 0.5 * np.einsum('ki,ij,kj->k', oms, I, oms)
mom = np.linalg.norm(oms @ I.T, axis=-1)
print(f"free body: energy drift {np.max(np.abs(E-E[0])):.2e}, |mom| drift {np.max(np.abs(mom-mom[0])):.2e}, time {el:.1f}s")
pis = np.einsum('kij,kj->ki', gs, oms @ I.T)
print("spatial momentum vector drift:", np.max(np.abs(pis - pis[0])))
print("orthonormality drift:", np.max(np.abs(np.swapaxes(gs, -1, -2) @ gs - np.eye(3))))

# ---- 3. closed-loop sphere: Lyapunov monotonic + error dynamics oracle
ref = refs.FigureEight()
L = lf.horizontal_lift(ref, (0.0, 2.0))
cfg = ctl.SphereControllerConfig(k_p=4.0, k_d=4.0, metric_scale=1.0)
h = 1e-4
q0 = np.array([[0.2, -0.9, np.sqrt(1 - 0.04 - 0.81)]])
v0 = np.array([[0.5, 0.3, 0.0]]); v0[0] -= (q0[0] @ v0[0]) * q0[0]
t0 = time.perf_counter()
recs = sim.rollout_sphere_batch(sim.SpherePlant(2, 1.0), L, cfg, q0, v0,
                                h=h, horizon=2.0, record_stride=1, threshold=1e-2)
el = time.perf_counter() - t0
r = recs[0]
print(f"rollout time {el:.1f}s; lyap violations: {r.summary.lyapunov_violations}, max dV: {r.summary.max_lyapunov_increase:.2e}")
e = r.state["e"]; edot = r.state["edot"]
o = np.array([0, 0, 1.0])
worst = 0.0
for i in range(1, len(e) - 1, 37):
    acc = (e[i + 1] - 2 * e[i] + e[i - 1]) / h**2
    acc = acc - (e[i] @ acc) * e[i]
    rhs = cfg.k_p * (o - (o @ e[i]) * e[i]) - cfg.k_d * edot[i]
    res = np.linalg.norm(acc - rhs) / (1.0 + edot[i] @ edot[i])
    worst = max(worst, res)
print("error-dynamics oracle worst residual (sphere):", worst)

# ---- 4. closed-loop sphere long run: convergence + rate fit
t0 = time.perf_counter()
res = sim.satellite_scenario(count=8, seed=11, horizon=30.0, record_stride=10)
el = time.perf_counter() - t0
print(f"mini satellite batch (8): {el:.1f}s; converged {res.converged_count}/8")
for r in res.records[:8]:
    s = r.summary
    print(f"  id {s.rollout_id}: conv {s.converged} t={s.convergence_time} rate={s.rate} r2={s.rate_r2} viol={s.lyapunov_violations}")
