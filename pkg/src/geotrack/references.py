"""Reference-trajectory registry.

Sphere references expose ``point(t)`` and ``velocity(t)``; group references
expose ``matrix(t)``.  Both accept scalar or array times.  Built-ins cover
the curves used by the bundled scenarios (great circles and figure-eights
on S^2, screw motions on SE(3) and on R^3 x SO(3), and a Lissajous sweep on
R^3 x SO(3)); arbitrary curves can be supplied as dense samples, which are
interpolated with cubic Hermite polynomials and projected back onto the
manifold.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import SE3, SO, GroupTag, Product, Translation
from .errors import ConfigurationError
from .interpolate import centered_slopes, check_uniform, hermite
from .sphere import origin as sphere_origin, tangential


class SphereReference:
    """Smooth curve on S^n with an available velocity."""

    n: int

    def point(self, t):
        raise NotImplementedError

    def velocity(self, t):
        raise NotImplementedError


class GroupReference:
    """Smooth curve on a matrix group."""

    tag: GroupTag

    def matrix(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class GreatCircle(SphereReference):
    """q(t) = cos(w t + phase) p + sin(w t + phase) u for orthonormal p, u."""

    p: np.ndarray
    u: np.ndarray
    rate: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if abs(np.linalg.norm(p) - 1) > 1e-9 or abs(np.linalg.norm(u) - 1) > 1e-9:
            raise ConfigurationError("great circle axes must be unit vectors")
        if abs(p @ u) > 1e-9:
            raise ConfigurationError("great circle axes must be orthogonal")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.p.size - 1

    def point(self, t):
        a = self.rate * np.asarray(t, dtype=float) + self.phase
        return np.cos(a)[..., None] * self.p + np.sin(a)[..., None] * self.u

    def velocity(self, t):
        a = self.rate * np.asarray(t, dtype=float) + self.phase
        return self.rate * (-np.sin(a)[..., None] * self.p + np.cos(a)[..., None] * self.u)


@dataclass(frozen=True)
class FigureEight(SphereReference):
    """Lissajous figure-eight around the origin of S^2.

    Normalization of c(t) = (a sin(w t), b sin(2 w t), 1); crosses the
    origin e_2 twice per period.
    """

    a: float = 0.8
    b: float = 0.5
    rate: float = 0.5

    n: int = field(default=2, init=False)

    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        w = self.rate
        c = np.stack(
            [
                self.a * np.sin(w * t),
                self.b * np.sin(2 * w * t),
                np.ones_like(t),
            ],
            axis=-1,
        )
        cdot = np.stack(
            [
                self.a * w * np.cos(w * t),
                2 * self.b * w * np.cos(2 * w * t),
                np.zeros_like(t),
            ],
            axis=-1,
        )
        return c, cdot

    def point(self, t):
        c, _ = self._raw(t)
        return c / np.linalg.norm(c, axis=-1, keepdims=True)

    def velocity(self, t):
        c, cdot = self._raw(t)
        norm = np.linalg.norm(c, axis=-1, keepdims=True)
        q = c / norm
        return tangential(q, cdot / norm)


@dataclass(frozen=True)
class ConstantPoint(SphereReference):
    """Stationary reference q(t) = q0."""

    q0: np.ndarray

    def __post_init__(self):
        q0 = np.asarray(self.q0, dtype=float)
        if abs(np.linalg.norm(q0) - 1.0) > 1e-9:
            raise ConfigurationError("constant reference must be a unit vector")
        object.__setattr__(self, "q0", q0)

    @property
    def n(self) -> int:
        return self.q0.size - 1

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.q0, t.shape + self.q0.shape).copy()

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + self.q0.shape)


@dataclass(frozen=True)
class SampledSphereReference(SphereReference):
    """Dense samples on S^n, cubic-Hermite interpolated and renormalized."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        check_uniform(times)
        if pts.ndim != 2 or pts.shape[0] != times.size:
            raise ConfigurationError("sample array must be (num_times, n+1)")
        norms = np.linalg.norm(pts, axis=-1)
        if np.max(np.abs(norms - 1.0)) > 1e-6:
            raise ConfigurationError("sphere samples must have unit norm within 1e-6")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", pts / norms[:, None])
        object.__setattr__(self, "_dt", float(times[1] - times[0]))
        object.__setattr__(self, "_slopes", centered_slopes(self.points, self._dt))

    @property
    def n(self) -> int:
        return self.points.shape[1] - 1

    def point(self, t):
        raw = hermite(t, self.times[0], self._dt, self.points, self._slopes)
        return raw / np.linalg.norm(raw, axis=-1, keepdims=True)

    def velocity(self, t):
        raw = hermite(t, self.times[0], self._dt, self.points, self._slopes)
        vel = hermite(t, self.times[0], self._dt, self._slopes,
                      centered_slopes(self._slopes, self._dt))
        q = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
        return tangential(q, vel / np.linalg.norm(raw, axis=-1, keepdims=True))


@dataclass(frozen=True)
class ScrewMotion(GroupReference):
    """One-parameter subgroup g0 exp(t hat(twist)) on SE(3)."""

    twist: np.ndarray
    g0: np.ndarray | None = None

    tag: GroupTag = field(default_factory=SE3, init=False)

    def __post_init__(self):
        tw = np.asarray(self.twist, dtype=float)
        if tw.shape != (6,):
            raise ConfigurationError("SE(3) twist must have 6 coordinates")
        object.__setattr__(self, "twist", tw)
        g0 = np.eye(4) if self.g0 is None else np.asarray(self.g0, dtype=float)
        self.tag.check(g0)
        object.__setattr__(self, "g0", g0)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        return self.g0 @ self.tag.exp(t[..., None] * self.twist)


@dataclass(frozen=True)
class ProductScrew(GroupReference):
    """Helix with a spinning attitude on R^3 x SO(3).

    Translation: circle of given radius in the (x, y) plane climbing at
    ``pitch`` per unit time; attitude: constant body rate about ``spin_axis``.
    """

    radius: float = 1.0
    pitch: float = 0.2
    rate: float = 0.5
    spin_rate: float = 0.5
    spin_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    tag: GroupTag = field(
        default_factory=lambda: Product((Translation(3), SO(3))), init=False
    )

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        a = self.rate * t
        x = np.stack(
            [
                self.radius * np.cos(a),
                self.radius * np.sin(a),
                self.pitch * t,
            ],
            axis=-1,
        )
        axis = np.asarray(self.spin_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        w = (self.spin_rate * t)[..., None] * axis
        out = np.zeros(t.shape + (7, 7))
        idx = np.arange(7)
        out[..., idx, idx] = 1.0
        out[..., :3, 3] = x
        out[..., 4:7, 4:7] = SO(3).exp(w)
        return out


@dataclass(frozen=True)
class GroupLissajous(GroupReference):
    """Sinusoidal sweep on R^3 x SO(3): per-axis translation sinusoids and a
    rocking attitude about a fixed axis."""

    amplitude: tuple[float, float, float] = (1.0, 0.8, 0.5)
    rates: tuple[float, float, float] = (0.5, 1.0, 1.5)
    attitude_amplitude: float = 0.8
    attitude_rate: float = 0.7
    attitude_axis: tuple[float, float, float] = (1.0, 1.0, 0.0)

    tag: GroupTag = field(
        default_factory=lambda: Product((Translation(3), SO(3))), init=False
    )

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        amp = np.asarray(self.amplitude, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        x = amp * np.sin(rates * t[..., None])
        axis = np.asarray(self.attitude_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        ang = self.attitude_amplitude * np.sin(self.attitude_rate * t)
        out = np.zeros(t.shape + (7, 7))
        idx = np.arange(7)
        out[..., idx, idx] = 1.0
        out[..., :3, 3] = x
        out[..., 4:7, 4:7] = SO(3).exp(ang[..., None] * axis)
        return out


@dataclass(frozen=True)
class SampledGroupReference(GroupReference):
    """Dense group samples, Hermite interpolated entrywise and re-projected."""

    tag: GroupTag
    times: np.ndarray
    matrices: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        mats = np.asarray(self.matrices, dtype=float)
        check_uniform(times)
        m = self.tag.matrix_size
        if mats.shape != (times.size, m, m):
            raise ConfigurationError(f"sample array must be (num_times, {m}, {m})")
        mats = self.tag.project(mats)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "_dt", float(times[1] - times[0]))
        object.__setattr__(self, "_slopes", centered_slopes(mats, self._dt))

    def matrix(self, t):
        raw = hermite(t, self.times[0], self._dt, self.matrices, self._slopes)
        return self.tag.project(raw)


def _build_great_circle(params: dict) -> SphereReference:
    n = int(params.get("n", 2))
    p = np.asarray(params.get("p", sphere_origin(n)), dtype=float)
    u = params.get("u")
    if u is None:
        u = np.zeros(n + 1)
        u[0] = 1.0
    return GreatCircle(p=p, u=np.asarray(u, dtype=float),
                       rate=float(params.get("rate", 1.0)),
                       phase=float(params.get("phase", 0.0)))


def _build_figure_eight(params: dict) -> SphereReference:
    return FigureEight(
        a=float(params.get("a", 0.8)),
        b=float(params.get("b", 0.5)),
        rate=float(params.get("rate", 0.5)),
    )


def _build_constant(params: dict) -> SphereReference:
    n = int(params.get("n", 2))
    return ConstantPoint(np.asarray(params.get("q0", sphere_origin(n)), dtype=float))


def _build_screw_se3(params: dict) -> GroupReference:
    return ScrewMotion(
        twist=np.asarray(params.get("twist", [0.2, 0.0, 0.1, 0.0, 0.0, 0.5]), dtype=float)
    )


def _build_screw_product(params: dict) -> GroupReference:
    return ProductScrew(
        radius=float(params.get("radius", 1.0)),
        pitch=float(params.get("pitch", 0.2)),
        rate=float(params.get("rate", 0.5)),
        spin_rate=float(params.get("spin_rate", 0.5)),
        spin_axis=tuple(params.get("spin_axis", (0.0, 0.0, 1.0))),
    )


def _build_lissajous(params: dict) -> GroupReference:
    return GroupLissajous(
        amplitude=tuple(params.get("amplitude", (1.0, 0.8, 0.5))),
        rates=tuple(params.get("rates", (0.5, 1.0, 1.5))),
        attitude_amplitude=float(params.get("attitude_amplitude", 0.8)),
        attitude_rate=float(params.get("attitude_rate", 0.7)),
        attitude_axis=tuple(params.get("attitude_axis", (1.0, 1.0, 0.0))),
    )


REGISTRY = {
    "great_circle": _build_great_circle,
    "figure_eight": _build_figure_eight,
    "constant": _build_constant,
    "screw_se3": _build_screw_se3,
    "screw": _build_screw_product,
    "lissajous": _build_lissajous,
}


def build_reference(name: str, params: dict | None = None):
    """Instantiate a built-in reference curve by registry name."""
    if name not in REGISTRY:
        raise ConfigurationError(
            f"unknown reference '{name}'; known: {sorted(REGISTRY)}", "reference.name"
        )
    return REGISTRY[name](params or {})
