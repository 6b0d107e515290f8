"""Closed-loop integrators, Monte-Carlo rollout batches, and metrics.

Two plant families: a mechanical system on S^n with a constant-multiple
round metric, and an Euler-Poincare system on a matrix group with a
left-invariant inertia.  Both use fourth-order integrators (classical RK4
in the sphere's ambient coordinates with tangency repair; a Munthe-Kaas
style exponential update on groups).

Rollout batches are embarrassingly parallel: each rollout owns its state,
while the lifted reference and configs are shared immutably.  Results are
merged by rollout index, so outputs do not depend on the worker count.
Initial states are drawn from per-rollout generators seeded through a
splitmix64 stream, recorded in each rollout's summary.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    SO,
    AlgebraMetric,
    GroupTag,
    Product,
    Translation,
    ad_coords,
    ad_star_coords,
)
from .control import (
    ForcedSystem,
    GroupControllerConfig,
    SphereControllerConfig,
    feedback_transform,
    group_config_distance,
    group_control_raw,
    group_error_raw,
    group_lyapunov_raw,
    sphere_control_raw,
    sphere_error_raw,
    sphere_lyapunov_raw,
)
from .errors import ConfigurationError
from .lift import LiftedReference, horizontal_lift, lift_on_group
from .navigation import (
    GroupNavigation,
    product_navigation,
    rotation_navigation,
    translation_navigation,
)
from .references import FigureEight, ProductScrew, SphereReference
from .sphere import arc_distance, tangential

GRAVITY = 9.81


# ---------------------------------------------------------------------------
# plants and single steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpherePlant:
    """Fully actuated mechanical system on S^n with metric scale * round."""

    n: int
    metric_scale: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.metric_scale <= 0:
            raise ConfigurationError("sphere plant requires n >= 1 and a positive scale")


@dataclass(frozen=True)
class GroupPlant:
    """Euler-Poincare system: I xi_dot = ad*_xi I xi + tau, g_dot = g hat(xi)."""

    tag: GroupTag
    inertia: AlgebraMetric

    def __post_init__(self):
        if self.inertia.tag != self.tag:
            raise ConfigurationError("plant inertia tag must match the plant tag")


def sphere_accel(plant: SpherePlant, q: np.ndarray, v: np.ndarray, force_row: np.ndarray) -> np.ndarray:
    """q_ddot = -(v . v) q + (1/scale) (1 - q q^T) force^T, batched."""
    return (
        -np.sum(v * v, axis=-1, keepdims=True) * q
        + tangential(q, force_row) / plant.metric_scale
    )


def step_sphere(plant: SpherePlant, state, force, h: float, t: float = 0.0):
    """One RK4 step of the sphere plant; batched over leading axes.

    ``force`` is either a fixed row covector or a policy callable
    (t, q, v) -> row evaluated at every stage.  The configuration is
    renormalized and the velocity re-projected after the step.
    """
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    q, v = (np.asarray(a, dtype=float) for a in state)

    def f(tt, qq, vv):
        row = force(tt, qq, vv) if callable(force) else force
        return sphere_accel(plant, qq, vv, row)

    a1 = f(t, q, v)
    q2, v2 = q + 0.5 * h * v, v + 0.5 * h * a1
    a2 = f(t + 0.5 * h, q2, v2)
    q3, v3 = q + 0.5 * h * v2, v + 0.5 * h * a2
    a3 = f(t + 0.5 * h, q3, v3)
    q4, v4 = q + h * v3, v + h * a3
    a4 = f(t + h, q4, v4)
    q_new = q + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    q_new = q_new / np.linalg.norm(q_new, axis=-1, keepdims=True)
    v_new = tangential(q_new, v_new)
    return q_new, v_new


def group_accel(plant: GroupPlant, xi: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """xi_dot = I_sharp(ad*_xi I xi + tau), batched."""
    mom = np.einsum("ij,...j->...i", plant.inertia.matrix, xi)
    return plant.inertia.sharp_coords(ad_star_coords(plant.tag, xi, mom) + tau)


def _dexpinv_coords(tag: GroupTag, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    uv = ad_coords(tag, u, v)
    return v - 0.5 * uv + ad_coords(tag, u, uv) / 12.0


def step_group(plant: GroupPlant, state, force, h: float, t: float = 0.0):
    """One Munthe-Kaas style order-4 step of the group plant; batched.

    ``force`` is a fixed body covector or a policy (t, g, xi) -> covector.
    The group configuration is updated by g <- g exp(u) with the stage
    combination u, keeping g in the group up to roundoff.
    """
    if h <= 0:
        raise ConfigurationError("step size must be positive")
    g, xi = state
    g = np.asarray(g, dtype=float)
    xi = np.asarray(xi, dtype=float)
    tag = plant.tag

    def tau_of(tt, gg, xx):
        return force(tt, gg, xx) if callable(force) else force

    def xdot(tt, gg, xx):
        return group_accel(plant, xx, tau_of(tt, gg, xx))

    k1u = xi
    k1x = xdot(t, g, xi)
    u2 = 0.5 * h * k1u
    x2 = xi + 0.5 * h * k1x
    k2u = _dexpinv_coords(tag, u2, x2)
    k2x = xdot(t + 0.5 * h, g @ tag.exp(u2), x2)
    u3 = 0.5 * h * k2u
    x3 = xi + 0.5 * h * k2x
    k3u = _dexpinv_coords(tag, u3, x3)
    k3x = xdot(t + 0.5 * h, g @ tag.exp(u3), x3)
    u4 = h * k3u
    x4 = xi + h * k3x
    k4u = _dexpinv_coords(tag, u4, x4)
    k4x = xdot(t + h, g @ tag.exp(u4), x4)
    u = (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    g_new = g @ tag.exp(u)
    xi_new = xi + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    return g_new, xi_new


def simulate_sphere(plant, force, q0, v0, h, steps, t0=0.0):
    """Fixed-step closed-loop trajectory; returns (times, q, v) arrays."""
    q = np.asarray(q0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    qs = np.empty((steps + 1,) + q.shape)
    vs = np.empty_like(qs)
    qs[0], vs[0] = q, v
    for k in range(steps):
        q, v = step_sphere(plant, (q, v), force, h, t0 + k * h)
        qs[k + 1], vs[k + 1] = q, v
    return t0 + h * np.arange(steps + 1), qs, vs


def simulate_group(plant, force, g0, xi0, h, steps, t0=0.0):
    """Fixed-step closed-loop trajectory; returns (times, g, xi) arrays."""
    g = np.asarray(g0, dtype=float).copy()
    xi = np.asarray(xi0, dtype=float).copy()
    gs = np.empty((steps + 1,) + g.shape)
    xis = np.empty((steps + 1,) + xi.shape)
    gs[0], xis[0] = g, xi
    for k in range(steps):
        g, xi = step_group(plant, (g, xi), force, h, t0 + k * h)
        gs[k + 1], xis[k + 1] = g, xi
    return t0 + h * np.arange(steps + 1), gs, xis


# ---------------------------------------------------------------------------
# seeding and initial-state sampling
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One output of the splitmix64 mixing function (64-bit)."""
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derived_seed(master: int, index: int) -> int:
    """Per-rollout seed: splitmix64 stream element ``index`` of ``master``."""
    return splitmix64((master + index * _GOLDEN) & _MASK64)


def sample_unit_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point on S^n (normalized Gaussian)."""
    q = rng.normal(size=n + 1)
    return q / np.linalg.norm(q)


def sample_tangent_ball(rng: np.random.Generator, q: np.ndarray, v_max: float) -> np.ndarray:
    """Uniform draw from the radius-v_max ball in the tangent plane at q."""
    n = q.size - 1
    w = rng.normal(size=q.size)
    w = w - (q @ w) * q
    w = w / np.linalg.norm(w)
    r = v_max * rng.uniform() ** (1.0 / n)
    return r * w


def sample_haar_rotation(rng: np.random.Generator, m: int = 3) -> np.ndarray:
    """Haar-distributed rotation: QR of a Gaussian matrix with sign fix."""
    a = rng.normal(size=(m, m))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def sample_coord_ball(rng: np.random.Generator, d: int, radius: float) -> np.ndarray:
    """Uniform draw from the radius ball in R^d."""
    w = rng.normal(size=d)
    w = w / np.linalg.norm(w)
    return radius * rng.uniform() ** (1.0 / d) * w


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: requested or hardware, capped by GEOTRACK_THREADS."""
    cap = os.environ.get("GEOTRACK_THREADS")
    workers = requested if requested else (os.cpu_count() or 1)
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


# ---------------------------------------------------------------------------
# rollout records
# ---------------------------------------------------------------------------


@dataclass
class RolloutSummary:
    rollout_id: int
    seed: int
    converged: bool
    convergence_time: float | None
    rate: float | None
    rate_r2: float | None
    lyapunov_violations: int
    max_lyapunov_increase: float
    max_invariant_drift: float
    max_reference_body_velocity: float
    threshold: float


@dataclass
class RolloutRecord:
    """Time series of one closed-loop rollout plus its summary.

    ``state`` maps named blocks (e.g. "q", "qdot", "ref_q") to sample-major
    arrays.  Summaries are recomputed from the stored samples by
    ``convergence_metrics``; Lyapunov violations in the summary are counted
    at the full integration rate even when samples are stored at a stride.
    """

    rollout_id: int
    kind: str
    times: np.ndarray
    state: dict[str, np.ndarray]
    control: np.ndarray
    lyapunov: np.ndarray
    error_config: np.ndarray
    error_velocity: np.ndarray
    error_total: np.ndarray
    summary: RolloutSummary | None = None


def fit_exponential_rate(times, error, start_level=0.5, floor=1e-5):
    """Least-squares slope of log(error) over the post-transient window.

    The window opens when the error first drops below ``start_level`` and
    closes when it reaches ``floor`` (to stay above integrator noise).
    Returns (rate, r_squared) with rate = -slope, or (None, None) if the
    window has fewer than five samples.
    """
    times = np.asarray(times, dtype=float)
    error = np.asarray(error, dtype=float)
    below = np.nonzero(error < start_level)[0]
    if below.size == 0:
        return None, None
    start = below[0]
    stop = len(error)
    hit_floor = np.nonzero(error[start:] < floor)[0]
    if hit_floor.size:
        stop = start + hit_floor[0]
    window = slice(start, stop)
    t = times[window]
    e = error[window]
    keep = e > 0
    t, e = t[keep], np.log(e[keep])
    if t.size < 5:
        return None, None
    a = np.stack([t, np.ones_like(t)], axis=1)
    coef, *_ = np.linalg.lstsq(a, e, rcond=None)
    resid = e - a @ coef
    ss_tot = float(np.sum((e - e.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return -float(coef[0]), r2


def convergence_time_from_series(times, error, threshold):
    """First time the error drops below threshold and stays below."""
    times = np.asarray(times, dtype=float)
    error = np.asarray(error, dtype=float)
    above = error >= threshold
    if above[-1] or np.all(above):
        return None if above[-1] else float(times[0])
    last_above = np.nonzero(above)[0]
    if last_above.size == 0:
        return float(times[0])
    return float(times[last_above[-1] + 1])


def convergence_metrics(record: RolloutRecord, threshold: float | None = None,
                        lyap_tol: float = 1e-8) -> dict:
    """Summary metrics recomputed from a rollout's stored samples."""
    thr = threshold if threshold is not None else (
        record.summary.threshold if record.summary else 1e-2
    )
    t_conv = convergence_time_from_series(record.times, record.error_total, thr)
    converged = t_conv is not None
    rate, r2 = (None, None)
    if converged:
        rate, r2 = fit_exponential_rate(record.times, record.error_total)
    dv = np.diff(record.lyapunov)
    stride_tol = lyap_tol * max(
        1, int(round(np.diff(record.times).mean() / np.diff(record.times).min()))
    )
    out = {
        "converged": converged,
        "convergence_time": t_conv,
        "rate": rate,
        "rate_r2": r2,
        "lyapunov_violations_sampled": int(np.sum(dv > stride_tol)),
        "max_sampled_lyapunov_increase": float(dv.max()) if dv.size else 0.0,
    }
    if not converged:
        out["rate"] = None
        out["rate_r2"] = None
    return out


class _Monitors:
    """Full-rate convergence / Lyapunov / drift trackers for a batch."""

    def __init__(self, count: int, threshold: float, lyap_tol: float):
        self.threshold = threshold
        self.lyap_tol = lyap_tol
        self.candidate = np.full(count, np.nan)
        self.prev_v = None
        self.violations = np.zeros(count, dtype=int)
        self.max_increase = np.full(count, -np.inf)
        self.max_drift = np.zeros(count)

    def update(self, t: float, err_total: np.ndarray, v: np.ndarray) -> None:
        below = err_total < self.threshold
        fresh = below & np.isnan(self.candidate)
        self.candidate[fresh] = t
        self.candidate[~below] = np.nan
        if self.prev_v is not None:
            dv = v - self.prev_v
            self.violations += dv > self.lyap_tol
            self.max_increase = np.maximum(self.max_increase, dv)
        self.prev_v = v.copy()

    def drift(self, value: np.ndarray) -> None:
        self.max_drift = np.maximum(self.max_drift, value)


# ---------------------------------------------------------------------------
# batched closed-loop rollouts
# ---------------------------------------------------------------------------


def rollout_sphere_batch(
    plant: SpherePlant,
    lift_ref: LiftedReference,
    cfg: SphereControllerConfig,
    q0: np.ndarray,
    v0: np.ndarray,
    *,
    h: float,
    horizon: float,
    t0: float = 0.0,
    record_stride: int = 1,
    threshold: float = 1e-2,
    lyap_tol: float = 1e-8,
    seeds: np.ndarray | None = None,
    id_offset: int = 0,
) -> list[RolloutRecord]:
    """Closed-loop sphere rollouts under the tracking controller, batched."""
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    count = q.shape[0]
    steps = int(round(horizon / h))
    half_times = t0 + 0.5 * h * np.arange(2 * steps + 1)
    r_tab, rdot_tab, rddot_tab = lift_ref.sample(half_times)
    nidx = plant.n
    scale_sqrt = np.sqrt(plant.metric_scale)

    def policy(i, qq, vv):
        return sphere_control_raw(cfg, r_tab[i], rdot_tab[i], rddot_tab[i], qq, vv)

    def accel(i, qq, vv):
        return sphere_accel(plant, qq, vv, policy(i, qq, vv))

    rec_idx = list(range(0, steps + 1, record_stride))
    if rec_idx[-1] != steps:
        rec_idx.append(steps)
    num_rec = len(rec_idx)
    rec_t = np.empty(num_rec)
    rec = {
        name: np.empty((count, num_rec, plant.n + 1))
        for name in ("q", "qdot", "e", "edot", "ref_q", "ref_qdot", "force")
    }
    rec_v = np.empty((count, num_rec))
    rec_ec = np.empty((count, num_rec))
    rec_ev = np.empty((count, num_rec))
    monitors = _Monitors(count, threshold, lyap_tol)
    rec_pos = 0

    for k in range(steps + 1):
        i0 = 2 * k
        e, edot = sphere_error_raw(r_tab[i0], rdot_tab[i0], q, v)
        v_lyap = sphere_lyapunov_raw(cfg, e, edot)
        err_c = arc_distance(q, r_tab[i0][:, nidx])
        err_v = scale_sqrt * np.linalg.norm(edot, axis=-1)
        monitors.update(t0 + k * h, err_c + err_v, v_lyap)
        if k in (rec_idx[rec_pos],):
            rec_t[rec_pos] = t0 + k * h
            rec["q"][:, rec_pos] = q
            rec["qdot"][:, rec_pos] = v
            rec["e"][:, rec_pos] = e
            rec["edot"][:, rec_pos] = edot
            rec["ref_q"][:, rec_pos] = r_tab[i0][:, nidx]
            rec["ref_qdot"][:, rec_pos] = rdot_tab[i0][:, nidx]
            rec["force"][:, rec_pos] = policy(i0, q, v)
            rec_v[:, rec_pos] = v_lyap
            rec_ec[:, rec_pos] = err_c
            rec_ev[:, rec_pos] = err_v
            rec_pos += 1
        if k == steps:
            break
        # classical RK4 with the policy evaluated at every stage
        a1 = accel(i0, q, v)
        q2, v2 = q + 0.5 * h * v, v + 0.5 * h * a1
        a2 = accel(i0 + 1, q2, v2)
        q3, v3 = q + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = accel(i0 + 1, q3, v3)
        q4, v4 = q + h * v3, v + h * a3
        a4 = accel(i0 + 2, q4, v4)
        q = q + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        norms = np.linalg.norm(q, axis=-1, keepdims=True)
        monitors.drift(np.abs(norms[:, 0] - 1.0))
        q = q / norms
        v = tangential(q, v)

    return _assemble_records(
        "sphere", rec_t, rec, rec_v, rec_ec, rec_ev, monitors,
        lift_ref, threshold, lyap_tol, seeds, id_offset,
    )


def rollout_group_batch(
    plant: GroupPlant,
    lift_ref: LiftedReference,
    cfg: GroupControllerConfig,
    g0: np.ndarray,
    xi0: np.ndarray,
    *,
    h: float,
    horizon: float,
    t0: float = 0.0,
    record_stride: int = 1,
    threshold: float = 1e-2,
    lyap_tol: float = 1e-8,
    seeds: np.ndarray | None = None,
    id_offset: int = 0,
    forced_system: ForcedSystem | None = None,
    external_force: np.ndarray | None = None,
) -> list[RolloutRecord]:
    """Closed-loop group rollouts under the tracking controller, batched.

    When a ForcedSystem is given, the applied force is the feedback
    transformation of the tracking control and ``external_force`` (e.g. a
    gravity wrench) is added by the plant.
    """
    g = np.array(g0, dtype=float)
    xi = np.array(xi0, dtype=float)
    count = g.shape[0]
    tag = plant.tag
    steps = int(round(horizon / h))
    half_times = t0 + 0.5 * h * np.arange(2 * steps + 1)
    gd_tab, xid_tab, xiddot_tab = lift_ref.sample_body(half_times)

    def virtual(i, gg, xx):
        return group_control_raw(cfg, gd_tab[i], xid_tab[i], xiddot_tab[i], gg, xx)

    def applied(i, gg, xx):
        tau = virtual(i, gg, xx)
        if forced_system is not None:
            tau = feedback_transform(forced_system, tau)
        return tau

    def total(i, gg, xx):
        tau = applied(i, gg, xx)
        if external_force is not None:
            tau = tau + external_force
        return tau

    def xdot(i, gg, xx):
        return group_accel(plant, xx, total(i, gg, xx))

    rec_idx = list(range(0, steps + 1, record_stride))
    if rec_idx[-1] != steps:
        rec_idx.append(steps)
    num_rec = len(rec_idx)
    m = tag.matrix_size
    d = tag.algebra_dim
    rec_t = np.empty(num_rec)
    rec = {
        "g": np.empty((count, num_rec, m, m)),
        "xi": np.empty((count, num_rec, d)),
        "e": np.empty((count, num_rec, m, m)),
        "xi_e": np.empty((count, num_rec, d)),
        "ref_g": np.empty((count, num_rec, m, m)),
        "ref_xi": np.empty((count, num_rec, d)),
        "force": np.empty((count, num_rec, d)),
    }
    rec_v = np.empty((count, num_rec))
    rec_ec = np.empty((count, num_rec))
    rec_ev = np.empty((count, num_rec))
    monitors = _Monitors(count, threshold, lyap_tol)
    rec_pos = 0

    for k in range(steps + 1):
        i0 = 2 * k
        e_mat, xi_e = group_error_raw(tag, gd_tab[i0], xid_tab[i0], g, xi)
        v_lyap = group_lyapunov_raw(cfg, e_mat, xi_e)
        err_c = group_config_distance(tag, e_mat)
        err_v = cfg.inertia.norm(xi_e)
        monitors.update(t0 + k * h, err_c + err_v, v_lyap)
        if k in (rec_idx[rec_pos],):
            rec_t[rec_pos] = t0 + k * h
            rec["g"][:, rec_pos] = g
            rec["xi"][:, rec_pos] = xi
            rec["e"][:, rec_pos] = e_mat
            rec["xi_e"][:, rec_pos] = xi_e
            rec["ref_g"][:, rec_pos] = gd_tab[i0]
            rec["ref_xi"][:, rec_pos] = np.broadcast_to(xid_tab[i0], xi.shape)
            rec["force"][:, rec_pos] = applied(i0, g, xi)
            rec_v[:, rec_pos] = v_lyap
            rec_ec[:, rec_pos] = err_c
            rec_ev[:, rec_pos] = err_v
            rec_pos += 1
        if k == steps:
            break
        # Munthe-Kaas style RK4 on the exponential coordinate and velocity
        k1u = xi
        k1x = xdot(i0, g, xi)
        u2 = 0.5 * h * k1u
        x2 = xi + 0.5 * h * k1x
        k2u = _dexpinv_coords(tag, u2, x2)
        k2x = xdot(i0 + 1, g @ tag.exp(u2), x2)
        u3 = 0.5 * h * k2u
        x3 = xi + 0.5 * h * k2x
        k3u = _dexpinv_coords(tag, u3, x3)
        k3x = xdot(i0 + 1, g @ tag.exp(u3), x3)
        u4 = h * k3u
        x4 = xi + h * k3x
        k4u = _dexpinv_coords(tag, u4, x4)
        k4x = xdot(i0 + 2, g @ tag.exp(u4), x4)
        g = g @ tag.exp((h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u))
        xi = xi + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        if k % 200 == 0:
            drift = tag.drift_each(g)
            monitors.drift(drift)
            if np.max(drift) > 1e-12:
                g = tag.project(g)

    return _assemble_records(
        "group", rec_t, rec, rec_v, rec_ec, rec_ev, monitors,
        lift_ref, threshold, lyap_tol, seeds, id_offset,
    )


def _assemble_records(
    kind, rec_t, rec, rec_v, rec_ec, rec_ev, monitors,
    lift_ref, threshold, lyap_tol, seeds, id_offset,
) -> list[RolloutRecord]:
    count = rec_v.shape[0]
    records = []
    for r in range(count):
        record = RolloutRecord(
            rollout_id=id_offset + r,
            kind=kind,
            times=rec_t.copy(),
            state={name: arr[r] for name, arr in rec.items() if name != "force"},
            control=rec["force"][r],
            lyapunov=rec_v[r],
            error_config=rec_ec[r],
            error_velocity=rec_ev[r],
            error_total=rec_ec[r] + rec_ev[r],
        )
        t_conv = monitors.candidate[r]
        rate, r2 = (None, None)
        if not np.isnan(t_conv):
            rate, r2 = fit_exponential_rate(record.times, record.error_total)
        record.summary = RolloutSummary(
            rollout_id=id_offset + r,
            seed=int(seeds[r]) if seeds is not None else -1,
            converged=not np.isnan(t_conv),
            convergence_time=None if np.isnan(t_conv) else float(t_conv),
            rate=rate,
            rate_r2=r2,
            lyapunov_violations=int(monitors.violations[r]),
            max_lyapunov_increase=float(monitors.max_increase[r]),
            max_invariant_drift=float(monitors.max_drift[r]),
            max_reference_body_velocity=lift_ref.max_body_velocity,
            threshold=threshold,
        )
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    kind: str
    records: list[RolloutRecord]
    lift: LiftedReference
    elapsed: float
    params: dict = field(default_factory=dict)

    @property
    def converged_count(self) -> int:
        return sum(1 for r in self.records if r.summary.converged)


def _run_chunks(worker_fn, count: int, workers: int) -> list[RolloutRecord]:
    workers = min(workers, count)
    bounds = np.linspace(0, count, workers + 1).astype(int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(chunks) == 1:
        return worker_fn(*chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda ab: worker_fn(*ab), chunks))
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.rollout_id)
    return records


def satellite_scenario(
    reference: SphereReference | None = None,
    *,
    count: int = 100,
    seed: int = 2024,
    v_max: float = 2.0,
    k_p: float = 4.0,
    k_d: float = 4.0,
    metric_scale: float = 1.0,
    h: float = 1e-3,
    horizon: float = 30.0,
    record_stride: int = 10,
    threshold: float = 1e-2,
    workers: int | None = None,
) -> ScenarioResult:
    """Batch of sphere rollouts tracking a figure-eight (by default) on S^2,
    from uniformly sampled initial states in the tangent bundle."""
    started = time.perf_counter()
    if reference is None:
        reference = FigureEight()
    plant = SpherePlant(n=reference.n, metric_scale=metric_scale)
    cfg = SphereControllerConfig(k_p=k_p, k_d=k_d, metric_scale=metric_scale)
    lift_ref = horizontal_lift(reference, (0.0, horizon))

    seeds = np.array([derived_seed(seed, i) for i in range(count)], dtype=np.uint64)
    q0 = np.empty((count, reference.n + 1))
    v0 = np.empty_like(q0)
    for i in range(count):
        rng = np.random.Generator(np.random.PCG64(int(seeds[i])))
        q0[i] = sample_unit_sphere(rng, reference.n)
        v0[i] = sample_tangent_ball(rng, q0[i], v_max)

    def worker(a: int, b: int) -> list[RolloutRecord]:
        return rollout_sphere_batch(
            plant, lift_ref, cfg, q0[a:b], v0[a:b],
            h=h, horizon=horizon, record_stride=record_stride,
            threshold=threshold, seeds=seeds[a:b], id_offset=a,
        )

    records = _run_chunks(worker, count, resolve_workers(workers))
    return ScenarioResult(
        kind="sphere",
        records=records,
        lift=lift_ref,
        elapsed=time.perf_counter() - started,
        params={
            "scenario": "satellite", "count": count, "seed": seed, "v_max": v_max,
            "k_p": k_p, "k_d": k_d, "metric_scale": metric_scale, "h": h,
            "horizon": horizon, "record_stride": record_stride,
            "threshold": threshold,
        },
    )


def default_robot_plant() -> GroupPlant:
    tag = Product((Translation(3), SO(3)))
    inertia = AlgebraMetric(tag, np.diag([1.0, 1.0, 1.0, 0.1, 0.15, 0.2]))
    return GroupPlant(tag, inertia)


def default_robot_controller(plant: GroupPlant) -> GroupControllerConfig:
    nav = product_navigation(
        translation_navigation(np.eye(3)), rotation_navigation(np.diag([1.0, 2.0, 3.0]))
    )
    # Translation dissipation at critical damping for m = 1, K_x = 1
    # (2 sqrt(2)); the rotation loop is already overdamped at 2.
    diss = np.diag([2.0 * np.sqrt(2.0)] * 3 + [2.0] * 3)
    return GroupControllerConfig(
        inertia=plant.inertia,
        dissipation=AlgebraMetric(plant.tag, diss),
        navigation=nav,
    )


def robot_scenario(
    reference=None,
    *,
    count: int = 20,
    seed: int = 7,
    v_max: float = 2.0,
    position_box: float = 2.0,
    plant: GroupPlant | None = None,
    controller: GroupControllerConfig | None = None,
    h: float = 1e-3,
    horizon: float = 20.0,
    record_stride: int = 10,
    threshold: float = 1e-2,
    workers: int | None = None,
    mass: float = 1.0,
) -> ScenarioResult:
    """Batch of rollouts of the omnidirectional robot on R^3 x SO(3) with
    gravity compensation folded in through the feedback transformation."""
    started = time.perf_counter()
    if reference is None:
        reference = ProductScrew()
    if plant is None:
        plant = default_robot_plant()
    if controller is None:
        controller = default_robot_controller(plant)
    lift_ref = lift_on_group(reference, (0.0, horizon))
    tag = plant.tag

    gravity_wrench = np.zeros(tag.algebra_dim)
    gravity_wrench[2] = -mass * GRAVITY
    system = ForcedSystem(bias_force=gravity_wrench)

    seeds = np.array([derived_seed(seed, i) for i in range(count)], dtype=np.uint64)
    m = tag.matrix_size
    g0 = np.zeros((count, m, m))
    xi0 = np.empty((count, tag.algebra_dim))
    x_ref0 = lift_ref.matrices[0][:3, 3]
    for i in range(count):
        rng = np.random.Generator(np.random.PCG64(int(seeds[i])))
        g0[i] = np.eye(m)
        g0[i, :3, 3] = x_ref0 + rng.uniform(-position_box, position_box, size=3)
        g0[i, 4:7, 4:7] = sample_haar_rotation(rng)
        xi0[i] = sample_coord_ball(rng, tag.algebra_dim, v_max)

    def worker(a: int, b: int) -> list[RolloutRecord]:
        return rollout_group_batch(
            plant, lift_ref, controller, g0[a:b], xi0[a:b],
            h=h, horizon=horizon, record_stride=record_stride,
            threshold=threshold, seeds=seeds[a:b], id_offset=a,
            forced_system=system, external_force=gravity_wrench,
        )

    records = _run_chunks(worker, count, resolve_workers(workers))
    return ScenarioResult(
        kind="group",
        records=records,
        lift=lift_ref,
        elapsed=time.perf_counter() - started,
        params={
            "scenario": "robot", "count": count, "seed": seed, "v_max": v_max,
            "position_box": position_box, "h": h, "horizon": horizon,
            "record_stride": record_stride, "threshold": threshold, "mass": mass,
        },
    )
