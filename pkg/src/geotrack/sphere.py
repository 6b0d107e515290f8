"""The unit sphere S^n as a rotation-group homogeneous space.

Points are unit vectors in R^(n+1); the designated origin is the last
coordinate axis e_n = (0, ..., 0, 1).  Rotations act by matrix-vector
product, the round metric is the restriction of the Euclidean one, and the
Levi-Civita covariant derivative along a curve is the tangential projection
of the ambient derivative.

The finite-difference covariant derivative here is a test oracle only; the
controllers use closed forms, and the oracle exists to validate them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import SO, AlgebraVector, GroupElement, _readonly
from .errors import ConfigurationError, TagMismatchError

UNIT_TOL = 1e-9


def origin(n: int) -> np.ndarray:
    """The designated origin e_n = (0, ..., 0, 1) of S^n."""
    e = np.zeros(n + 1)
    e[n] = 1.0
    return e


@dataclass(frozen=True)
class SpherePoint:
    """Unit vector in R^(n+1)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ConfigurationError("sphere point must be a vector in R^(n+1), n >= 1")
        if abs(np.linalg.norm(c) - 1.0) > UNIT_TOL:
            raise ConfigurationError("sphere point must have unit norm within 1e-9")
        object.__setattr__(self, "coords", _readonly(c))

    @property
    def n(self) -> int:
        return self.coords.size - 1


@dataclass(frozen=True)
class SphereTangent:
    """Tangent vector: base point q and ambient vector with q . vec = 0."""

    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=float)
        if v.shape != self.base.coords.shape:
            raise ConfigurationError("tangent vector dimension mismatch")
        if abs(float(self.base.coords @ v)) > UNIT_TOL:
            raise ConfigurationError("tangent vector must be orthogonal to its base")
        object.__setattr__(self, "vec", _readonly(v))


@dataclass(frozen=True)
class SphereCovector:
    """Cotangent row vector at a base point (round-metric dual of a tangent)."""

    base: SpherePoint
    row: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.row, dtype=float)
        if r.shape != self.base.coords.shape:
            raise ConfigurationError("covector dimension mismatch")
        if abs(float(self.base.coords @ r)) > UNIT_TOL:
            raise ConfigurationError("covector must annihilate the radial direction")
        object.__setattr__(self, "row", _readonly(r))


def sphere_flat(v: SphereTangent) -> SphereCovector:
    """Round-metric index lowering (transpose in ambient coordinates)."""
    return SphereCovector(v.base, v.vec)


def sphere_sharp(f: SphereCovector) -> SphereTangent:
    """Round-metric index raising (transpose in ambient coordinates)."""
    return SphereTangent(f.base, f.row)


def _check_rotation_tag(R: GroupElement, n: int) -> None:
    if not isinstance(R.tag, SO) or R.tag.m != n + 1:
        raise TagMismatchError(
            f"action on S^{n} requires an SO({n + 1}) element, got {R.tag}"
        )


def act(R: GroupElement, q: SpherePoint) -> SpherePoint:
    """Rotation action (R, q) -> R q, renormalized if drift exceeds 1e-12."""
    _check_rotation_tag(R, q.n)
    out = R.matrix @ q.coords
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-12:
        out = out / norm
    return SpherePoint(out)


def act_tangent(R: GroupElement, v: SphereTangent) -> SphereTangent:
    """Differential of the action: (base, vec) -> (R base, R vec)."""
    _check_rotation_tag(R, v.base.n)
    return SphereTangent(act(R, v.base), R.matrix @ v.vec)


def act_covector(R: GroupElement, f: SphereCovector) -> SphereCovector:
    """Covector pushforward under the isometry R: row -> row R^T at R base."""
    _check_rotation_tag(R, f.base.n)
    return SphereCovector(act(R, f.base), f.row @ R.matrix.T)


def project_tangent(q: SpherePoint, w: np.ndarray) -> SphereTangent:
    """Orthogonal projection (1 - q q^T) w of an ambient vector; idempotent."""
    w = np.asarray(w, dtype=float)
    return SphereTangent(q, w - (q.coords @ w) * q.coords)


def tangential(q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Raw projection (1 - q q^T) w, batched over leading axes."""
    return w - np.sum(q * w, axis=-1, keepdims=True) * q


def geodesic_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Great-circle distance arccos(p . q) in [0, pi]."""
    return float(arc_distance(p.coords, q.coords))


def arc_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Batched great-circle distance; dot products are clamped to [-1, 1]."""
    return np.arccos(np.clip(np.sum(p * q, axis=-1), -1.0, 1.0))


def covariant_derivative_along(
    points: np.ndarray, field: np.ndarray, step: float, index: int
) -> np.ndarray:
    """Covariant derivative of a vector field along a uniformly sampled curve.

    Central finite difference of the field, projected tangentially at the
    curve point; second-order consistent in ``step``.  Interior samples
    only; this is a test oracle and deliberately has no one-sided branch.
    """
    points = np.asarray(points, dtype=float)
    field = np.asarray(field, dtype=float)
    if not 0 < index < len(points) - 1:
        raise ConfigurationError("covariant derivative oracle requires an interior sample")
    dot = (field[index + 1] - field[index - 1]) / (2.0 * step)
    return tangential(points[index], dot)


def covariant_acceleration(points: np.ndarray, step: float, index: int) -> np.ndarray:
    """Second-difference covariant acceleration of a sampled sphere curve."""
    points = np.asarray(points, dtype=float)
    if not 0 < index < len(points) - 1:
        raise ConfigurationError("covariant acceleration oracle requires an interior sample")
    acc = (points[index + 1] - 2.0 * points[index] + points[index - 1]) / step**2
    return tangential(points[index], acc)


@dataclass(frozen=True)
class ReductiveSplit:
    """Splitting of so(n+1) into the stabilizer algebra of the origin and its
    rotation-invariant complement (the horizontal directions).

    In the hat representation the stabilizer block is the upper-left n x n
    skew block and the horizontal part is read off from the last column.
    """

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("reductive split requires n >= 1")

    @property
    def tag(self) -> SO:
        return SO(self.n + 1)

    @property
    def fiber_tag(self) -> SO:
        return SO(self.n)

    @property
    def origin(self) -> np.ndarray:
        return origin(self.n)

    @property
    def stabilizer_dim(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def horizontal_dim(self) -> int:
        return self.n

    @cached_property
    def stabilizer_basis(self) -> np.ndarray:
        """Hat-matrix basis of the stabilizer algebra, shape (dim_f, n+1, n+1)."""
        sub = self.fiber_tag.hat(np.eye(self.stabilizer_dim))
        out = np.zeros((self.stabilizer_dim, self.n + 1, self.n + 1))
        out[:, : self.n, : self.n] = sub
        return out

    @cached_property
    def horizontal_basis(self) -> np.ndarray:
        """Hat-matrix basis of the horizontal complement, shape (n, n+1, n+1)."""
        out = np.zeros((self.n, self.n + 1, self.n + 1))
        for k in range(self.n):
            out[k, k, self.n] = 1.0
            out[k, self.n, k] = -1.0
        return out

    def horizontal_coords(self, xi: AlgebraVector | np.ndarray) -> np.ndarray:
        """Horizontal component, read off the last column of hat(xi)."""
        mat = self._hat_of(xi)
        return mat[..., : self.n, self.n].copy()

    def stabilizer_coords(self, xi: AlgebraVector | np.ndarray) -> np.ndarray:
        """Stabilizer component as so(n) coordinates (upper-left block)."""
        mat = self._hat_of(xi)
        return self.fiber_tag.vee(mat[..., : self.n, : self.n])

    def embed_horizontal(self, upsilon: np.ndarray) -> AlgebraVector:
        upsilon = np.asarray(upsilon, dtype=float)
        mat = np.zeros((self.n + 1, self.n + 1))
        mat[: self.n, self.n] = upsilon
        mat[self.n, : self.n] = -upsilon
        return AlgebraVector(self.tag, self.tag.vee(mat))

    def embed_stabilizer(self, coords: np.ndarray) -> AlgebraVector:
        mat = np.zeros((self.n + 1, self.n + 1))
        mat[: self.n, : self.n] = self.fiber_tag.hat(np.asarray(coords, dtype=float))
        return AlgebraVector(self.tag, self.tag.vee(mat))

    def embed_fiber_element(self, f_mat: np.ndarray) -> np.ndarray:
        """Embed an SO(n) stabilizer element as an SO(n+1) matrix fixing the origin."""
        f_mat = np.asarray(f_mat, dtype=float)
        out = np.zeros(f_mat.shape[:-2] + (self.n + 1, self.n + 1))
        out[..., : self.n, : self.n] = f_mat
        out[..., self.n, self.n] = 1.0
        return out

    def extract_fiber_element(self, g_mat: np.ndarray) -> np.ndarray:
        """Inverse of embed_fiber_element for matrices fixing the origin."""
        return np.asarray(g_mat, dtype=float)[..., : self.n, : self.n].copy()

    def _hat_of(self, xi) -> np.ndarray:
        if isinstance(xi, AlgebraVector):
            if xi.tag != self.tag:
                raise TagMismatchError(f"expected {self.tag} algebra element")
            return xi.hat
        return self.tag.hat(np.asarray(xi, dtype=float))


def reductive_split(n: int) -> ReductiveSplit:
    """The standard reductive decomposition of so(n+1) at the origin e_n."""
    return ReductiveSplit(n)
