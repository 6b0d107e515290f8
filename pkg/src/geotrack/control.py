"""Tracking error maps and the two specialized tracking controllers.

The sphere controller consumes a lifted rotation reference (R, R_dot,
R_ddot) and returns an ambient row covector at q; the group controller
consumes the reference body velocity and its rate and returns a body-frame
(left-trivialized) covector.  Both reduce the tracking problem to the
regulation of an intrinsic error state: closing the loop makes the error
obey an autonomous mechanical system with a navigation-function potential
and strict dissipation, which the test suite verifies by finite
differences.

Force representations are never converted implicitly; the feedback
transformation for scaled metrics and constant bias forces is explicit.

All functions here are pure in (config, reference sample, state, time) and
safe for concurrent rollouts sharing one immutable lifted reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    SE3,
    SO,
    AlgebraCovector,
    AlgebraMetric,
    AlgebraVector,
    GroupElement,
    GroupTag,
    Product,
    Translation,
    ad_action_coords,
    ad_coords,
    ad_star_coords,
)
from .errors import ConfigurationError, TagMismatchError, UnsupportedFeatureError
from .navigation import GroupNavigation, SphereNavigation
from .sphere import (
    SphereCovector,
    SpherePoint,
    SphereTangent,
    arc_distance,
    origin as sphere_origin,
    tangential,
)


@dataclass(frozen=True)
class SphereControllerConfig:
    """Gains for the sphere tracking controller.

    ``metric_scale`` is the constant c in the kinetic-energy metric c * rho
    (the axial inertia for the satellite); the whole control row is scaled
    by it so the closed-loop error dynamics keep the (k_p, k_d) rates.
    """

    k_p: float = 4.0
    k_d: float = 4.0
    metric_scale: float = 1.0

    def __post_init__(self):
        if self.k_p <= 0 or self.k_d <= 0 or self.metric_scale <= 0:
            raise ConfigurationError("sphere controller gains must be positive")

    def navigation(self, n: int) -> SphereNavigation:
        return SphereNavigation(k_p=self.metric_scale * self.k_p)


@dataclass(frozen=True)
class GroupControllerConfig:
    """Inertia, dissipation, and navigation function for the group controller."""

    inertia: AlgebraMetric
    dissipation: AlgebraMetric
    navigation: GroupNavigation

    def __post_init__(self):
        if self.inertia.tag != self.dissipation.tag or self.inertia.tag != self.navigation.tag:
            raise TagMismatchError("controller metrics and navigation must share a tag")

    @property
    def tag(self) -> GroupTag:
        return self.inertia.tag


@dataclass(frozen=True)
class ErrorState:
    """Intrinsic tracking error: configuration error, velocity error, the
    distance to the designated origin, and the tracking Lyapunov value."""

    e: SpherePoint | GroupElement
    e_dot: SphereTangent | AlgebraVector
    dist: float
    lyapunov: float

    def velocity_norm(self) -> float:
        if isinstance(self.e_dot, SphereTangent):
            return float(np.linalg.norm(self.e_dot.vec))
        return float(np.linalg.norm(self.e_dot.coords))

    def matches_reference(self, tol: float = 1e-9) -> bool:
        """True iff the tracked state equals the reference state (both the
        configuration and the velocity, at tolerance tol)."""
        return self.dist <= tol and self.velocity_norm() <= tol


# ---------------------------------------------------------------------------
# sphere controller
# ---------------------------------------------------------------------------


def sphere_error_raw(
    r_d: np.ndarray, r_d_dot: np.ndarray, q: np.ndarray, q_dot: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Raw error map: e = R^T q, e_dot = R^T q_dot + R_dot^T q, batched."""
    rt = np.swapaxes(r_d, -1, -2)
    rdt = np.swapaxes(r_d_dot, -1, -2)
    e = np.einsum("...ij,...j->...i", rt, q)
    e_dot = np.einsum("...ij,...j->...i", rt, q_dot) + np.einsum(
        "...ij,...j->...i", rdt, q
    )
    return e, e_dot


def sphere_lyapunov_raw(
    cfg: SphereControllerConfig, e: np.ndarray, e_dot: np.ndarray
) -> np.ndarray:
    """V = P(e) + (1/2) kappa(e_dot, e_dot) with the scaled potential."""
    n = e.shape[-1] - 1
    pot = -cfg.metric_scale * cfg.k_p * e[..., n]
    kin = 0.5 * cfg.metric_scale * np.sum(e_dot * e_dot, axis=-1)
    return pot + kin


def sphere_error(
    r_d: GroupElement | np.ndarray,
    r_d_dot: np.ndarray,
    q: SpherePoint,
    q_dot: SphereTangent,
    config: SphereControllerConfig | None = None,
) -> ErrorState:
    """Tracking error of (q, q_dot) against one lifted reference sample."""
    r_mat = r_d.matrix if isinstance(r_d, GroupElement) else np.asarray(r_d, float)
    e, e_dot = sphere_error_raw(r_mat, np.asarray(r_d_dot, float), q.coords, q_dot.vec)
    cfg = config if config is not None else SphereControllerConfig(k_p=1.0, k_d=1.0)
    point = SpherePoint(e / np.linalg.norm(e))
    dist = float(arc_distance(point.coords, sphere_origin(point.n)))
    return ErrorState(
        e=point,
        e_dot=SphereTangent(point, tangential(point.coords, e_dot)),
        dist=dist,
        lyapunov=float(sphere_lyapunov_raw(cfg, e, e_dot)),
    )


def sphere_control_raw(
    cfg: SphereControllerConfig,
    r_d: np.ndarray,
    r_d_dot: np.ndarray,
    r_d_ddot: np.ndarray,
    q: np.ndarray,
    q_dot: np.ndarray,
) -> np.ndarray:
    """Tracking control row covector at q, batched over leading axes.

    Column form of the row q_d^T (q q^T - 1) is (q . q_d) q - q_d, and
    similarly for the feedforward row; everything assembles from ambient
    dot products.
    """
    n = q.shape[-1] - 1
    q_d = r_d[..., :, n]
    # -k_p q_d^T (q q^T - 1)
    pot = -cfg.k_p * (np.sum(q * q_d, axis=-1, keepdims=True) * q - q_d)
    # -k_d (q_dot^T + q^T R_dot R^T); the row's column form is R R_dot^T q
    diss = -cfg.k_d * (
        q_dot + np.einsum("...ij,...kj,...k->...i", r_d, r_d_dot, q)
    )
    # (q^T R_ddot + 2 q_dot^T R_dot) R^T (q q^T - 1)
    s = np.einsum("...ji,...j->...i", r_d_ddot, q) + 2.0 * np.einsum(
        "...ji,...j->...i", r_d_dot, q_dot
    )
    s = np.einsum("...ij,...j->...i", r_d, s)
    ff = np.sum(q * s, axis=-1, keepdims=True) * q - s
    return cfg.metric_scale * (pot + diss + ff)


def sphere_control(
    cfg: SphereControllerConfig,
    r_d: GroupElement | np.ndarray,
    r_d_dot: np.ndarray,
    r_d_ddot: np.ndarray,
    q: SpherePoint,
    q_dot: SphereTangent,
    t: float | None = None,
) -> SphereCovector:
    """Almost-globally convergent tracking control on S^n (row covector at q)."""
    r_mat = r_d.matrix if isinstance(r_d, GroupElement) else np.asarray(r_d, float)
    row = sphere_control_raw(
        cfg, r_mat, np.asarray(r_d_dot, float), np.asarray(r_d_ddot, float),
        q.coords, q_dot.vec,
    )
    return SphereCovector(q, tangential(q.coords, row))


# ---------------------------------------------------------------------------
# group controller
# ---------------------------------------------------------------------------


def group_error_raw(
    tag: GroupTag,
    g_d: np.ndarray,
    xi_d: np.ndarray,
    g: np.ndarray,
    xi: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw group error: e = g_d^-1 g and xi_e = xi - Ad_{e^-1} xi_d, batched."""
    e = tag.inv(g_d) @ g
    xi_e = xi - ad_action_coords(tag, tag.inv(e), xi_d)
    return e, xi_e


def group_config_distance(tag: GroupTag, e_mat: np.ndarray) -> np.ndarray:
    """Geodesic surrogate: log-norm where the log is defined, Frobenius
    chordal distance to the identity otherwise; batched."""
    e_mat = np.asarray(e_mat, dtype=float)
    if isinstance(tag, Product):
        parts = [
            group_config_distance(f, e_mat[..., s, s])
            for f, s in zip(tag.factors, tag.block_slices)
        ]
        return np.sqrt(sum(p * p for p in parts))
    if isinstance(tag, Translation):
        return np.linalg.norm(e_mat[..., : tag.n, tag.n], axis=-1)
    if isinstance(tag, SO) and tag.m == 3:
        tr = np.trace(e_mat, axis1=-2, axis2=-1)
        return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
    if isinstance(tag, SO) and tag.m == 2:
        return np.abs(np.arctan2(e_mat[..., 1, 0], e_mat[..., 0, 0]))
    # SE(3) and higher rotation groups: per-element log with chordal fallback.
    flat = e_mat.reshape((-1, tag.matrix_size, tag.matrix_size))
    out = np.empty(flat.shape[0])
    for i, m in enumerate(flat):
        try:
            out[i] = np.linalg.norm(tag.log(m))
        except Exception:
            out[i] = np.linalg.norm(m - np.eye(tag.matrix_size))
    return out.reshape(e_mat.shape[:-2])


def group_lyapunov_raw(
    cfg: GroupControllerConfig, e_mat: np.ndarray, xi_e: np.ndarray
) -> np.ndarray:
    """V = P(e) + (1/2) <I xi_e, xi_e>, batched."""
    return cfg.navigation.value_matrix(e_mat) + 0.5 * np.einsum(
        "...i,ij,...j->...", xi_e, cfg.inertia.matrix, xi_e
    )


def group_error(
    g_d: GroupElement,
    xi_d: AlgebraVector,
    g: GroupElement,
    xi: AlgebraVector,
    config: GroupControllerConfig | None = None,
) -> ErrorState:
    """Tracking error of (g, xi) against a reference sample (g_d, xi_d)."""
    if g_d.tag != g.tag or xi_d.tag != g.tag or xi.tag != g.tag:
        raise TagMismatchError("group error requires matching tags")
    e_mat, xi_e = group_error_raw(g.tag, g_d.matrix, xi_d.coords, g.matrix, xi.coords)
    dist = float(group_config_distance(g.tag, e_mat))
    if config is not None:
        lyap = float(group_lyapunov_raw(config, e_mat, xi_e))
    else:
        lyap = 0.5 * float(xi_e @ xi_e)
    return ErrorState(
        e=GroupElement(g.tag, g.tag.project(e_mat)),
        e_dot=AlgebraVector(g.tag, xi_e),
        dist=dist,
        lyapunov=lyap,
    )


def group_control_raw(
    cfg: GroupControllerConfig,
    g_d: np.ndarray,
    xi_d: np.ndarray,
    xi_d_dot: np.ndarray,
    g: np.ndarray,
    xi: np.ndarray,
) -> np.ndarray:
    """Body-frame tracking control covector, batched over leading axes."""
    tag = cfg.tag
    inertia = cfg.inertia.matrix
    e = tag.inv(g_d) @ g
    e_inv = tag.inv(e)
    ad_e_inv_xi_d = ad_action_coords(tag, e_inv, xi_d)
    xi_e = xi - ad_e_inv_xi_d
    zeta = cfg.navigation.zeta_coords(e)
    diss = np.einsum("ij,...j->...i", cfg.dissipation.matrix, xi_e)
    feed = np.einsum(
        "ij,...j->...i",
        inertia,
        ad_action_coords(tag, e_inv, xi_d_dot) + ad_coords(tag, xi, xi_e),
    )
    momentum_e = np.einsum("ij,...j->...i", inertia, xi_e)
    momentum = np.einsum("ij,...j->...i", inertia, xi)
    return (
        -zeta
        - diss
        + feed
        + ad_star_coords(tag, xi_e, momentum_e)
        - ad_star_coords(tag, xi, momentum)
    )


def group_control(
    cfg: GroupControllerConfig,
    g_d: GroupElement,
    xi_d: AlgebraVector,
    xi_d_dot: AlgebraVector,
    g: GroupElement,
    xi: AlgebraVector,
    t: float | None = None,
) -> AlgebraCovector:
    """Almost-globally convergent tracking control on a Lie group.

    Returns the left-trivialized covector; the physical force is its
    pullback along left translation by g (the library's canonical force
    representation for group plants).
    """
    for value in (g_d, xi_d, xi_d_dot, g, xi):
        if value.tag != cfg.tag:
            raise TagMismatchError("group control requires matching tags")
    tau = group_control_raw(
        cfg, g_d.matrix, xi_d.coords, xi_d_dot.coords, g.matrix, xi.coords
    )
    return AlgebraCovector(cfg.tag, tau)


# ---------------------------------------------------------------------------
# feedback transformation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForcedSystem:
    """Plant description for the feedback transformation.

    Supported: kinetic metric equal to a constant multiple of the invariant
    one (``metric_ratio``) and a constant bias force such as a gravity
    wrench (``bias_force``, in the plant's force representation).  A
    non-vanishing difference tensor between the two connections is outside
    the supported class and is rejected explicitly.
    """

    metric_ratio: float = 1.0
    bias_force: np.ndarray | None = None
    difference_tensor: object | None = None

    def __post_init__(self):
        if self.metric_ratio <= 0:
            raise ConfigurationError("metric ratio must be positive")
        if self.bias_force is not None:
            object.__setattr__(
                self, "bias_force", np.asarray(self.bias_force, dtype=float)
            )


def feedback_transform(system: ForcedSystem, virtual_force: np.ndarray) -> np.ndarray:
    """Force to apply to the forced plant so that the composite system obeys
    the canonical unforced dynamics driven by ``virtual_force``."""
    if system.difference_tensor is not None:
        raise UnsupportedFeatureError(
            "non-vanishing difference tensors are not supported; only "
            "constant-scaling metrics and constant bias forces"
        )
    out = system.metric_ratio * np.asarray(virtual_force, dtype=float)
    if system.bias_force is not None:
        out = out - system.bias_force
    return out
