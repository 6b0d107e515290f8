"""Horizontal lifting of reference curves through the bundle SO(n+1) -> S^n.

The bundle projection is g -> g @ origin.  Each chart carries a
geodesic-rotation section composed with a fixed chart rotation; its domain
is the sphere minus a closed polar cap around the section's singular point.
The fiber coordinate of g in a chart is the stabilizer element
section(pi(g))^-1 g.

Lifting solves the fiber initial value problem chart by chart, switching
charts with hysteresis, and reconstructs g(t) = section(q(t)) f(t).  The
reconstruction projects exactly to the input curve at every sample no
matter how coarse the fiber integration is; integration error lives purely
in the fiber coordinate.  Reference derivatives are recovered afterwards by
fourth-order finite differences on the reconstructed samples, with the grid
refined until a Richardson estimate of the derivative error is below
tolerance.

Lifting a single curve is sequential (the fiber IVP is causal), but a
completed LiftedReference is immutable and can be shared across concurrent
rollouts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import SO, GroupElement, ad_coords
from .errors import ChartError, ChartSwitchNeeded, ConfigurationError, LiftError
from .interpolate import centered_slopes, hermite
from .references import GroupReference, SphereReference
from .sphere import ReductiveSplit, arc_distance, origin as sphere_origin

DEFAULT_CAP = 0.2
DEFAULT_HYSTERESIS = 0.05


def _geodesic_rotation(p: np.ndarray) -> np.ndarray:
    """Rotation in the plane span(origin, p) taking the origin to p.

    Batched over leading axes; singular at the antipode of the origin.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[-1] - 1
    c = p[..., n]
    if np.any(1.0 + c < 1e-12):
        raise ChartError("geodesic rotation undefined at the origin's antipode")
    w = p.copy()
    w[..., n] = 0.0
    a = sphere_origin(n)
    eye = np.broadcast_to(np.eye(n + 1), p.shape[:-1] + (n + 1, n + 1)).copy()
    wa = w[..., :, None] * a[..., None, :]
    return (
        eye
        + wa
        - np.swapaxes(wa, -1, -2)
        + (c - 1.0)[..., None, None] * np.outer(a, a)
        - (w[..., :, None] * w[..., None, :]) / (1.0 + c)[..., None, None]
    )


def _geodesic_rotation_rate(p: np.ndarray, pdot: np.ndarray) -> np.ndarray:
    """Derivative of the geodesic-rotation section along pdot, batched."""
    p = np.asarray(p, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    n = p.shape[-1] - 1
    c = p[..., n]
    cdot = pdot[..., n]
    w = p.copy()
    w[..., n] = 0.0
    wdot = pdot.copy()
    wdot[..., n] = 0.0
    a = sphere_origin(n)
    one_pc = (1.0 + c)[..., None, None]
    wa = wdot[..., :, None] * a[..., None, :]
    ww_dot = w[..., :, None] * wdot[..., None, :]
    return (
        wa
        - np.swapaxes(wa, -1, -2)
        + cdot[..., None, None] * np.outer(a, a)
        - (ww_dot + np.swapaxes(ww_dot, -1, -2)) / one_pc
        + cdot[..., None, None] * (w[..., :, None] * w[..., None, :]) / one_pc**2
    )


def initial_lift(q0: np.ndarray) -> GroupElement:
    """A rotation mapping the origin to q0: geodesic in the shared plane, or
    the fixed pi-rotation in the (e_0, e_n) plane when q0 is the antipode."""
    q0 = np.asarray(q0, dtype=float)
    n = q0.size - 1
    if 1.0 + q0[n] < 1e-12:
        mat = np.eye(n + 1)
        mat[0, 0] = -1.0
        mat[n, n] = -1.0
        return GroupElement(SO(n + 1), mat)
    return GroupElement(SO(n + 1), _geodesic_rotation(q0))


@dataclass(frozen=True)
class Trivialization:
    """A local chart of SO(n+1) -> S^n.

    ``rotation`` is the fixed chart rotation C; the section is
    q -> C @ geodesic_rotation(C^T q), smooth away from the excluded point
    -C @ origin.  The domain is the complement of the closed polar cap of
    half-angle ``cap`` around the excluded point.
    """

    index: int
    n: int
    rotation: np.ndarray
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float)
        SO(self.n + 1).check(rot)
        object.__setattr__(self, "rotation", rot)

    @cached_property
    def split(self) -> ReductiveSplit:
        return ReductiveSplit(self.n)

    @cached_property
    def excluded_point(self) -> np.ndarray:
        return -self.rotation @ sphere_origin(self.n)

    def margin(self, q: np.ndarray) -> np.ndarray:
        """Geodesic distance from the excluded point, batched."""
        return arc_distance(np.asarray(q, dtype=float), self.excluded_point)

    def contains(self, q: np.ndarray, slack: float = 0.0) -> np.ndarray:
        return self.margin(q) > self.cap + slack

    def section(self, q: np.ndarray) -> np.ndarray:
        """Rotation taking the origin to q, smooth on the chart domain."""
        q = np.asarray(q, dtype=float)
        if np.any(~self.contains(q)):
            raise ChartError(
                f"point outside chart {self.index} (within its excluded cap)"
            )
        p = q @ self.rotation  # C^T q, batched
        return self.rotation @ _geodesic_rotation(p)

    def section_body_matrix(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Left-trivialized derivative of the section along tangent v."""
        p = np.asarray(q, dtype=float) @ self.rotation
        pdot = np.asarray(v, dtype=float) @ self.rotation
        geo = _geodesic_rotation(p)
        rate = _geodesic_rotation_rate(p, pdot)
        return np.swapaxes(geo, -1, -2) @ rate

    def connection_form(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Local connection form: stabilizer component of the section's body
        velocity, as so(n) coordinates.  The section lift of v corrected by
        the negative of this value is horizontal."""
        if np.any(~self.contains(np.asarray(q, dtype=float))):
            raise ChartError(f"point outside chart {self.index}")
        body = self.section_body_matrix(q, v)
        return self.split.fiber_tag.vee(body[..., : self.n, : self.n])

    def fiber_coordinate(self, g_mat: np.ndarray) -> np.ndarray:
        """Fiber part of g: section(pi(g))^-1 g as an SO(n) matrix."""
        g_mat = np.asarray(g_mat, dtype=float)
        q = g_mat[..., :, self.n]
        sec = self.section(q)
        full = np.swapaxes(sec, -1, -2) @ g_mat
        return self.split.extract_fiber_element(full)

    def reconstruct(self, q: np.ndarray, f_mat: np.ndarray) -> np.ndarray:
        """Inverse trivialization: g = section(q) @ embed(f)."""
        return self.section(q) @ self.split.embed_fiber_element(f_mat)


def default_atlas(n: int, cap: float = DEFAULT_CAP) -> tuple[Trivialization, ...]:
    """Two charts with antipodal excluded points (-origin and +origin)."""
    flip = np.eye(n + 1)
    flip[0, 0] = -1.0
    flip[n, n] = -1.0
    return (
        Trivialization(0, n, np.eye(n + 1), cap),
        Trivialization(1, n, flip, cap),
    )


def connection_form(chart: Trivialization, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return chart.connection_form(q, v)


# ---------------------------------------------------------------------------
# fiber IVP
# ---------------------------------------------------------------------------


def _dexpinv(tag: SO, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Truncated at the double bracket, sufficient for a fourth-order method.
    uv = ad_coords(tag, u, v)
    return v - 0.5 * uv + ad_coords(tag, u, uv) / 12.0


def _fiber_run(
    chart: Trivialization,
    reference: SphereReference,
    t_start: float,
    dt: float,
    num_intervals: int,
    f0_mat: np.ndarray,
    substeps: int,
) -> np.ndarray:
    """Integrate the fiber IVP over ``num_intervals`` uniform intervals.

    Munthe-Kaas style fourth-order steps of the left-invariant ODE on the
    fiber group; ``dt`` may be negative (backward fill).  Returns fiber
    matrices at the interval endpoints, shape (num_intervals + 1, n, n).
    """
    ftag = chart.split.fiber_tag
    d = ftag.algebra_dim
    if num_intervals == 0:
        return np.asarray(f0_mat, dtype=float)[None, ...].copy()
    h = dt / substeps
    # Stage nodes at spacing h/2 across the whole run, evaluated in one shot.
    num_nodes = 2 * substeps * num_intervals + 1
    t_nodes = t_start + 0.5 * h * np.arange(num_nodes)
    q_nodes = reference.point(t_nodes)
    margins = chart.margin(q_nodes)
    if np.any(margins <= chart.cap):
        bad = int(np.argmax(margins <= chart.cap))
        raise ChartSwitchNeeded(float(t_nodes[bad]))
    if d == 0:
        return np.broadcast_to(
            np.asarray(f0_mat, dtype=float), (num_intervals + 1, ftag.m, ftag.m)
        ).copy()
    a_nodes = chart.connection_form(q_nodes, reference.velocity(t_nodes))

    if d == 1:
        # Abelian fiber: the Munthe-Kaas step degenerates to a Simpson rule
        # cumulative quadrature of -A along the curve.
        a1 = a_nodes[0:-1:2]
        a2 = a_nodes[1::2]
        a3 = a_nodes[2::2]
        increments = -(h / 6.0) * (a1 + 4.0 * a2 + a3)
        theta = np.concatenate(
            [np.zeros((1, 1)), np.cumsum(increments, axis=0)[substeps - 1 :: substeps]]
        )
        return np.asarray(f0_mat, dtype=float) @ ftag.exp(theta)

    def xi(node_index: int, f_mat: np.ndarray) -> np.ndarray:
        # Body velocity of the fiber curve: -Ad_{f^-1} A(t).
        a_hat = ftag.hat(a_nodes[node_index])
        return -ftag.vee(np.swapaxes(f_mat, -1, -2) @ a_hat @ f_mat)

    out = np.empty((num_intervals + 1, ftag.m, ftag.m))
    out[0] = f0_mat
    f = np.asarray(f0_mat, dtype=float)
    for k in range(num_intervals):
        for j in range(substeps):
            base = 2 * (substeps * k + j)
            k1 = xi(base, f)
            k2 = _dexpinv(ftag, 0.5 * h * k1, xi(base + 1, f @ ftag.exp(0.5 * h * k1)))
            k3 = _dexpinv(ftag, 0.5 * h * k2, xi(base + 1, f @ ftag.exp(0.5 * h * k2)))
            k4 = _dexpinv(ftag, h * k3, xi(base + 2, f @ ftag.exp(h * k3)))
            f = f @ ftag.exp(h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if ftag.drift(f) > 1e-12:
            f = ftag.project(f)
        out[k + 1] = f
    return out


def fiber_ivp_step(
    chart: Trivialization,
    reference: SphereReference,
    times: np.ndarray,
    f0: GroupElement,
    substeps: int = 4,
) -> np.ndarray:
    """Solve the fiber IVP along a single-chart segment of the reference.

    ``times`` must be a uniform grid contained in the chart domain; raises
    ChartSwitchNeeded (with the offending time) if the curve leaves it.
    Returns fiber matrices at the grid samples.
    """
    times = np.asarray(times, dtype=float)
    if not isinstance(f0.tag, SO) or f0.tag.m != chart.n:
        raise ConfigurationError(f"fiber initial value must be SO({chart.n})")
    from .interpolate import check_uniform

    dt = check_uniform(times)
    return _fiber_run(
        chart, reference, float(times[0]), dt, times.size - 1, f0.matrix, substeps
    )


# ---------------------------------------------------------------------------
# lifted references
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiftedReference:
    """Time-indexed lifted reference with finite-difference derivatives.

    For sphere lifts, ``matrices[k] @ origin`` reproduces the reference
    point at each sample no matter how coarse the fiber integration was.
    Between samples, matrices and their derivatives are cubic-Hermite
    interpolated.
    """

    kind: str  # "sphere" or "group"
    tag: object
    times: np.ndarray
    matrices: np.ndarray
    matrices_dot: np.ndarray
    matrices_ddot: np.ndarray
    chart_ids: np.ndarray | None = None
    sphere_dim: int | None = None

    def __post_init__(self):
        for name in ("times", "matrices", "matrices_dot", "matrices_ddot"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @cached_property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @cached_property
    def _ddot_slopes(self) -> np.ndarray:
        return centered_slopes(self.matrices_ddot, self.dt)

    def sample(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Interpolated (g, g_dot, g_ddot) at times t (scalar or array)."""
        t0 = float(self.times[0])
        g = hermite(t, t0, self.dt, self.matrices, self.matrices_dot)
        gd = hermite(t, t0, self.dt, self.matrices_dot, self.matrices_ddot)
        gdd = hermite(t, t0, self.dt, self.matrices_ddot, self._ddot_slopes)
        return g, gd, gdd

    @property
    def origin(self) -> np.ndarray:
        if self.kind != "sphere":
            raise ConfigurationError("origin is defined for sphere lifts only")
        return sphere_origin(self.sphere_dim)

    def point(self, t) -> np.ndarray:
        g, _, _ = self.sample(t)
        return g[..., :, self.sphere_dim]

    def point_velocity(self, t) -> np.ndarray:
        _, gd, _ = self.sample(t)
        return gd[..., :, self.sphere_dim]

    @cached_property
    def body_velocity(self) -> np.ndarray:
        """Body velocity coordinates vee(g^-1 g_dot) at the samples."""
        inv = self.tag.inv(self.matrices)
        return self.tag.vee(inv @ self.matrices_dot)

    @cached_property
    def body_acceleration(self) -> np.ndarray:
        """Time derivative of the body velocity at the samples."""
        inv = self.tag.inv(self.matrices)
        xi_hat = self.tag.hat(self.body_velocity)
        return self.tag.vee(inv @ self.matrices_ddot - xi_hat @ xi_hat)

    @cached_property
    def _body_acc_slopes(self) -> np.ndarray:
        return centered_slopes(self.body_acceleration, self.dt)

    def sample_body(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Interpolated (g, body velocity, body acceleration) at times t."""
        t0 = float(self.times[0])
        g = hermite(t, t0, self.dt, self.matrices, self.matrices_dot)
        xi = hermite(t, t0, self.dt, self.body_velocity, self.body_acceleration)
        xidot = hermite(t, t0, self.dt, self.body_acceleration, self._body_acc_slopes)
        return g, xi, xidot

    @cached_property
    def max_body_velocity(self) -> float:
        return float(np.max(np.linalg.norm(self.body_velocity, axis=-1)))

    def horizontality_residual(self) -> np.ndarray:
        """Norm of the stabilizer component of the body velocity per sample.

        Diagnostic only: exactness of the lift does not depend on it.
        """
        if self.kind != "sphere":
            raise ConfigurationError("horizontality is defined for sphere lifts only")
        split = ReductiveSplit(self.sphere_dim)
        stab = split.stabilizer_coords(self.body_velocity)
        if stab.shape[-1] == 0:
            return np.zeros(len(self.times))
        return np.linalg.norm(stab, axis=-1)

    def exactness_residual(self, reference: SphereReference) -> float:
        """Max deviation of g @ origin from the reference points at samples."""
        q_ref = reference.point(self.times)
        return float(np.max(np.abs(self.matrices[..., :, self.sphere_dim] - q_ref)))


def _fd_derivatives(mats: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order central first and second derivatives; input includes two
    ghost samples on each side, output covers the core samples."""
    m2, m1, z, p1, p2 = mats[:-4], mats[1:-3], mats[2:-2], mats[3:-1], mats[4:]
    dot = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dt)
    ddot = (-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / (12.0 * dt**2)
    return dot, ddot


def _plan_charts(
    atlas: tuple[Trivialization, ...],
    q_samples: np.ndarray,
    times: np.ndarray,
    hysteresis: float,
) -> np.ndarray:
    margins = np.stack([chart.margin(q_samples) for chart in atlas])
    ids = np.empty(len(q_samples), dtype=int)
    current = int(np.argmax(margins[:, 0]))
    for k in range(len(q_samples)):
        cap = atlas[current].cap
        if margins[current, k] <= cap + hysteresis:
            current = int(np.argmax(margins[:, k]))
            if margins[current, k] <= atlas[current].cap:
                raise LiftError(
                    "no chart contains the reference point", time=float(times[k])
                )
        ids[k] = current
    return ids


def _build_sphere_lift(
    reference: SphereReference,
    t0: float,
    t1: float,
    num_samples: int,
    g0_mat: np.ndarray,
    atlas: tuple[Trivialization, ...],
    substeps: int,
    hysteresis: float,
) -> LiftedReference:
    n = reference.n
    split = ReductiveSplit(n)
    dt = (t1 - t0) / (num_samples - 1)
    # Two ghost samples per side so that every core sample is interior to
    # the fourth-order difference stencils.
    times_ext = t0 + dt * np.arange(-2, num_samples + 2)
    k0 = 2  # index of t0 in the extended grid
    q_ext = reference.point(times_ext)
    speed = np.max(np.linalg.norm(reference.velocity(times_ext), axis=-1))
    if speed * dt >= hysteresis:
        raise LiftError(
            "reference samples too sparse for reliable chart switching: "
            f"step {dt:.3g} x speed {speed:.3g} exceeds the hysteresis band"
        )
    ids = _plan_charts(atlas, q_ext, times_ext, hysteresis)

    q0 = q_ext[k0]
    if np.max(np.abs(g0_mat[:, n] - q0)) > 1e-9:
        raise LiftError("initial group point does not lift the initial reference point")
    f_mats = np.empty((len(times_ext), n, n))
    f_mats[k0] = atlas[ids[k0]].fiber_coordinate(g0_mat)

    def convert(f_mat: np.ndarray, q: np.ndarray, old: int, new: int) -> np.ndarray:
        if old == new:
            return f_mat
        before = atlas[old].reconstruct(q, f_mat)
        return atlas[new].fiber_coordinate(before)

    # Forward sweep from t0 in runs of constant chart (each interval [k, k+1]
    # is integrated in chart ids[k]; the fiber coordinate is converted at every
    # switch sample), then a short backward sweep fills the left ghosts.
    k = k0
    f = f_mats[k0]
    while k < len(times_ext) - 1:
        chart_id = ids[k]
        end = k
        while end < len(times_ext) - 1 and ids[end] == chart_id:
            end += 1
        run = _fiber_run(
            atlas[chart_id], reference, float(times_ext[k]), dt, end - k, f, substeps
        )
        f_mats[k : end + 1] = run
        f = convert(run[-1], q_ext[end], chart_id, ids[end])
        f_mats[end] = f
        k = end
    f = f_mats[k0]
    for k in range(k0, 0, -1):
        chart_id = ids[k - 1]
        f = convert(f, q_ext[k], ids[k], chart_id)
        seg = _fiber_run(
            atlas[chart_id], reference, float(times_ext[k]), -dt, 1, f, substeps
        )
        f = seg[1]
        f_mats[k - 1] = f

    # Reconstruct; exact projection to the reference by construction.
    g_ext = np.empty((len(times_ext), n + 1, n + 1))
    for chart_id in np.unique(ids):
        sel = ids == chart_id
        g_ext[sel] = atlas[chart_id].reconstruct(q_ext[sel], f_mats[sel])
    g_dot, g_ddot = _fd_derivatives(g_ext, dt)
    return LiftedReference(
        kind="sphere",
        tag=SO(n + 1),
        times=times_ext[2:-2],
        matrices=g_ext[2:-2],
        matrices_dot=g_dot,
        matrices_ddot=g_ddot,
        chart_ids=ids[2:-2],
        sphere_dim=n,
    )


def _refine(build, initial_samples: int, tol: float, max_refinements: int):
    lift = build(initial_samples)
    num = initial_samples
    for _ in range(max_refinements):
        finer = build(2 * (num - 1) + 1)
        # Richardson estimate for a fourth-order method: |D_h - D_h/2| / 15.
        err_dot = np.max(np.abs(lift.matrices_dot - finer.matrices_dot[::2])) / 15.0
        err_ddot = np.max(np.abs(lift.matrices_ddot - finer.matrices_ddot[::2])) / 15.0
        lift, num = finer, 2 * (num - 1) + 1
        if max(err_dot, err_ddot) < tol:
            break
    return lift


def horizontal_lift(
    reference: SphereReference,
    span: tuple[float, float],
    g0: GroupElement | None = None,
    *,
    atlas: tuple[Trivialization, ...] | None = None,
    initial_samples: int | None = None,
    substeps: int = 4,
    derivative_tol: float = 1e-6,
    max_refinements: int = 6,
    hysteresis: float = DEFAULT_HYSTERESIS,
) -> LiftedReference:
    """Horizontally lift a sphere reference over ``span`` through g0.

    g0 defaults to the geodesic rotation onto the initial point.  The grid
    is refined (doubling) until the Richardson-estimated error of the
    finite-difference derivatives drops below ``derivative_tol``.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ConfigurationError("lift span must satisfy t1 > t0")
    if atlas is None:
        atlas = default_atlas(reference.n)
    if g0 is None:
        g0 = initial_lift(reference.point(t0))
    if initial_samples is None:
        initial_samples = max(65, int(np.ceil((t1 - t0) / 0.02)) + 1)

    def build(num_samples: int) -> LiftedReference:
        return _build_sphere_lift(
            reference, t0, t1, num_samples, g0.matrix, atlas, substeps, hysteresis
        )

    return _refine(build, initial_samples, derivative_tol, max_refinements)


def lift_on_group(
    reference: GroupReference,
    span: tuple[float, float],
    *,
    initial_samples: int | None = None,
    derivative_tol: float = 1e-6,
    max_refinements: int = 6,
) -> LiftedReference:
    """Lift of a group-valued reference: the curve itself, with derivatives
    recovered by the same finite-difference stencils as the sphere path."""
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ConfigurationError("lift span must satisfy t1 > t0")
    if initial_samples is None:
        initial_samples = max(65, int(np.ceil((t1 - t0) / 0.02)) + 1)

    def build(num_samples: int) -> LiftedReference:
        dt = (t1 - t0) / (num_samples - 1)
        times_ext = t0 + dt * np.arange(-2, num_samples + 2)
        g_ext = reference.matrix(times_ext)
        g_dot, g_ddot = _fd_derivatives(g_ext, dt)
        return LiftedReference(
            kind="group",
            tag=reference.tag,
            times=times_ext[2:-2],
            matrices=g_ext[2:-2],
            matrices_dot=g_dot,
            matrices_ddot=g_ddot,
        )

    return _refine(build, initial_samples, derivative_tol, max_refinements)
