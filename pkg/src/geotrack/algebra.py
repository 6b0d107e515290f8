"""Matrix Lie group / Lie algebra kernel.

Supported groups: the rotation groups SO(m) for any m >= 1, the rigid-body
group SE(3), the translation group R^n in homogeneous-matrix form, and
finite products of these, represented block-diagonally.

Coordinate bases are fixed once per algebra and every coordinate vector is
meaningless without its tag:

* so(3): the cross-product (hat-map) basis, ``hat(a) @ b == cross(a, b)``.
* so(m), m != 3: strictly-lower-triangular pairs (i, j), i > j, in
  lexicographic order; basis element k has ``+1`` at (i, j) and ``-1`` at
  (j, i).
* se(3): (linear, angular) ordering, ``coords = (v, w)`` with
  ``hat((v, w)) = [[hat(w), v], [0, 0]]``.
* translations: the coordinates are the translation vector itself.
* products: concatenation of the factor coordinates in factor order.

All values are immutable after construction and every operation is a pure
function, so they can be shared freely across threads or workers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, CutLocusError, TagMismatchError

ORTHONORMALITY_TOL = 1e-9
DRIFT_REPAIR_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# group tags
# ---------------------------------------------------------------------------


class GroupTag:
    """Base class for group identifiers; carries all group-specific numerics."""

    matrix_size: int
    algebra_dim: int

    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_size)

    @cached_property
    def basis(self) -> np.ndarray:
        """Stack of hat-mapped coordinate basis vectors, shape (d, m, m)."""
        return self.hat(np.eye(self.algebra_dim))

    def hat(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def vee(self, mat: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exp(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, mat: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv(self, mat: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, mat: np.ndarray) -> np.ndarray:
        """Repair accumulated drift, returning the nearest group element."""
        raise NotImplementedError

    def check(self, mat: np.ndarray, tol: float = ORTHONORMALITY_TOL) -> None:
        """Raise ConfigurationError if ``mat`` violates the group invariants."""
        raise NotImplementedError

    def drift(self, mat: np.ndarray) -> float:
        """Max-norm deviation from the group invariants (0 for exact members)."""
        return float(np.max(self.drift_each(mat)))

    def drift_each(self, mat: np.ndarray) -> np.ndarray:
        """Per-element invariant deviation, batched over leading axes."""
        raise NotImplementedError


def _polar_rotation(mat: np.ndarray) -> np.ndarray:
    # Nearest special-orthogonal matrix: polar factor of mat, i.e.
    # mat @ (mat^T mat)^(-1/2), computed stably through the SVD.
    u, _, vt = np.linalg.svd(mat)
    r = u @ vt
    if mat.ndim == 2:
        if np.linalg.det(r) < 0:
            u[..., -1] *= -1.0
            r = u @ vt
    else:
        neg = np.linalg.det(r) < 0
        if np.any(neg):
            u[neg, :, -1] *= -1.0
            r = u @ vt
    return r


@dataclass(frozen=True)
class SO(GroupTag):
    """Rotation group of m x m special-orthogonal matrices."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("SO(m) requires m >= 1")

    @property
    def matrix_size(self) -> int:
        return self.m

    @property
    def algebra_dim(self) -> int:
        return self.m * (self.m - 1) // 2

    @cached_property
    def _pairs(self) -> list[tuple[int, int]]:
        # Strictly-lower-triangular index pairs in lexicographic order.
        return [(i, j) for i in range(self.m) for j in range(i)]

    def hat(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (self.m, self.m))
        if self.m == 3:
            x, y, z = coords[..., 0], coords[..., 1], coords[..., 2]
            out[..., 0, 1] = -z
            out[..., 0, 2] = y
            out[..., 1, 0] = z
            out[..., 1, 2] = -x
            out[..., 2, 0] = -y
            out[..., 2, 1] = x
            return out
        for k, (i, j) in enumerate(self._pairs):
            out[..., i, j] = coords[..., k]
            out[..., j, i] = -coords[..., k]
        return out

    def vee(self, mat):
        mat = np.asarray(mat, dtype=float)
        if self.m == 1:
            return np.zeros(mat.shape[:-2] + (0,))
        skew = 0.5 * (mat - np.swapaxes(mat, -1, -2))
        if self.m == 3:
            return np.stack(
                [skew[..., 2, 1], skew[..., 0, 2], skew[..., 1, 0]], axis=-1
            )
        return np.stack([skew[..., i, j] for (i, j) in self._pairs], axis=-1)

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        if self.m == 1:
            return np.ones(coords.shape[:-1] + (1, 1))
        if self.m == 2:
            th = coords[..., 0]
            c, s = np.cos(th), np.sin(th)
            return np.stack(
                [np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2
            )
        if self.m == 3:
            return _so3_exp(coords)
        # Higher-dimensional rotations: scaling-and-squaring Pade.
        mats = self.hat(coords)
        if mats.ndim == 2:
            return scipy.linalg.expm(mats)
        flat = mats.reshape((-1, self.m, self.m))
        return np.stack([scipy.linalg.expm(a) for a in flat]).reshape(mats.shape)

    def log(self, mat):
        mat = np.asarray(mat, dtype=float)
        if self.m == 1:
            return np.zeros(mat.shape[:-2] + (0,))
        if self.m == 2:
            return np.stack([np.arctan2(mat[..., 1, 0], mat[..., 0, 0])], axis=-1)
        if self.m == 3:
            return _so3_log(mat)
        if mat.ndim != 2:
            return np.stack(
                [self.log(a) for a in mat.reshape((-1, self.m, self.m))]
            ).reshape(mat.shape[:-2] + (self.algebra_dim,))
        lg = scipy.linalg.logm(mat)
        coords = self.vee(np.real(lg))
        if np.max(np.abs(self.exp(coords) - mat)) > 1e-9:
            raise CutLocusError(
                "rotation log undefined: matrix at or near a pi-rotation"
            )
        return coords

    def inv(self, mat):
        return np.swapaxes(np.asarray(mat, dtype=float), -1, -2)

    def project(self, mat):
        return _polar_rotation(np.asarray(mat, dtype=float))

    def drift_each(self, mat):
        mat = np.asarray(mat, dtype=float)
        gram = np.swapaxes(mat, -1, -2) @ mat - np.eye(self.m)
        return np.max(np.abs(gram), axis=(-1, -2))

    def check(self, mat, tol=ORTHONORMALITY_TOL):
        mat = np.asarray(mat, dtype=float)
        if mat.shape[-2:] != (self.m, self.m):
            raise ConfigurationError(
                f"SO({self.m}) element must be {self.m}x{self.m}, got {mat.shape}"
            )
        if self.drift(mat) > tol:
            raise ConfigurationError(f"matrix is not orthonormal within {tol}")
        if np.max(np.abs(np.linalg.det(mat) - 1.0)) > tol:
            raise ConfigurationError(f"determinant differs from 1 by more than {tol}")


def _so3_exp(coords: np.ndarray) -> np.ndarray:
    """Rodrigues formula, series-stabilized near zero; batched over leading axes."""
    coords = np.asarray(coords, dtype=float)
    th = np.linalg.norm(coords, axis=-1)
    th2 = th * th
    small = th < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - th2 / 6.0, np.sin(th) / np.where(small, 1.0, th))
        b = np.where(
            small, 0.5 - th2 / 24.0, (1.0 - np.cos(th)) / np.where(small, 1.0, th2)
        )
    k = SO(3).hat(coords)
    k2 = k @ k
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * k2


def _so3_log(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    tr = np.trace(mat, axis1=-2, axis2=-1)
    if np.any(tr <= -1.0 + 1e-9):
        raise CutLocusError(
            "rotation log undefined: antipodal/pi-rotation (trace <= -1 + 1e-9)"
        )
    c = np.clip((tr - 1.0) / 2.0, -1.0, 1.0)
    th = np.arccos(c)
    w = SO(3).vee(mat)  # = sin(theta) * axis
    small = th < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        # theta / sin(theta), with the small-angle series 1 + th^2/6.
        scale = np.where(
            small, 1.0 + th * th / 6.0, th / np.where(small, 1.0, np.sin(th))
        )
    return scale[..., None] * w


def _so3_left_jacobian(w: np.ndarray) -> np.ndarray:
    """V(w) with exp_se3((v, w)) translation column V(w) @ v."""
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w, axis=-1)
    th2 = th * th
    small = th < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(
            small, 0.5 - th2 / 24.0, (1.0 - np.cos(th)) / np.where(small, 1.0, th2)
        )
        c = np.where(
            small,
            1.0 / 6.0 - th2 / 120.0,
            (th - np.sin(th)) / np.where(small, 1.0, th2 * th),
        )
    k = SO(3).hat(w)
    return np.eye(3) + b[..., None, None] * k + c[..., None, None] * (k @ k)


def _so3_left_jacobian_inv(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w, axis=-1)
    th2 = th * th
    small = th < 1e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        half_th = th / 2.0
        cot = np.where(
            small,
            1.0 / 12.0 + th2 / 720.0,
            (1.0 - half_th * np.cos(half_th) / np.where(small, 1.0, np.sin(half_th)))
            / np.where(small, 1.0, th2),
        )
    k = SO(3).hat(w)
    return np.eye(3) - 0.5 * k + cot[..., None, None] * (k @ k)


@dataclass(frozen=True)
class SE3(GroupTag):
    """Rigid-body group of 4x4 homogeneous matrices; coords (linear, angular)."""

    @property
    def matrix_size(self) -> int:
        return 4

    @property
    def algebra_dim(self) -> int:
        return 6

    def hat(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (4, 4))
        out[..., :3, :3] = SO(3).hat(coords[..., 3:])
        out[..., :3, 3] = coords[..., :3]
        return out

    def vee(self, mat):
        mat = np.asarray(mat, dtype=float)
        return np.concatenate(
            [mat[..., :3, 3], SO(3).vee(mat[..., :3, :3])], axis=-1
        )

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        v, w = coords[..., :3], coords[..., 3:]
        out = np.zeros(coords.shape[:-1] + (4, 4))
        out[..., :3, :3] = _so3_exp(w)
        out[..., :3, 3] = (_so3_left_jacobian(w) @ v[..., None])[..., 0]
        out[..., 3, 3] = 1.0
        return out

    def log(self, mat):
        mat = np.asarray(mat, dtype=float)
        w = _so3_log(mat[..., :3, :3])
        v = (_so3_left_jacobian_inv(w) @ mat[..., :3, 3, None])[..., 0]
        return np.concatenate([v, w], axis=-1)

    def inv(self, mat):
        mat = np.asarray(mat, dtype=float)
        rt = np.swapaxes(mat[..., :3, :3], -1, -2)
        out = np.zeros_like(mat)
        out[..., :3, :3] = rt
        out[..., :3, 3] = -(rt @ mat[..., :3, 3, None])[..., 0]
        out[..., 3, 3] = 1.0
        return out

    def project(self, mat):
        mat = np.asarray(mat, dtype=float)
        out = np.zeros_like(mat)
        out[..., :3, :3] = _polar_rotation(mat[..., :3, :3])
        out[..., :3, 3] = mat[..., :3, 3]
        out[..., 3, 3] = 1.0
        return out

    def drift_each(self, mat):
        mat = np.asarray(mat, dtype=float)
        d = SO(3).drift_each(mat[..., :3, :3])
        bottom = np.max(
            np.abs(mat[..., 3, :] - np.array([0.0, 0.0, 0.0, 1.0])), axis=-1
        )
        return np.maximum(d, bottom)

    def check(self, mat, tol=ORTHONORMALITY_TOL):
        mat = np.asarray(mat, dtype=float)
        if mat.shape[-2:] != (4, 4):
            raise ConfigurationError(f"SE(3) element must be 4x4, got {mat.shape}")
        if np.any(mat[..., 3, :] != np.array([0.0, 0.0, 0.0, 1.0])):
            raise ConfigurationError("SE(3) bottom row must be (0, 0, 0, 1) exactly")
        SO(3).check(mat[..., :3, :3], tol)


@dataclass(frozen=True)
class Translation(GroupTag):
    """R^n as the group of (n+1)x(n+1) homogeneous translation matrices."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("Translation(n) requires n >= 1")

    @property
    def matrix_size(self) -> int:
        return self.n + 1

    @property
    def algebra_dim(self) -> int:
        return self.n

    def hat(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (self.n + 1, self.n + 1))
        out[..., : self.n, self.n] = coords
        return out

    def vee(self, mat):
        return np.asarray(mat, dtype=float)[..., : self.n, self.n].copy()

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (self.n + 1, self.n + 1))
        idx = np.arange(self.n + 1)
        out[..., idx, idx] = 1.0
        out[..., : self.n, self.n] = coords
        return out

    def log(self, mat):
        return self.vee(mat)

    def inv(self, mat):
        return self.exp(-self.vee(mat))

    def project(self, mat):
        return self.exp(self.vee(mat))

    def drift_each(self, mat):
        mat = np.asarray(mat, dtype=float)
        return np.max(np.abs(mat - self.exp(self.vee(mat))), axis=(-1, -2))

    def check(self, mat, tol=ORTHONORMALITY_TOL):
        mat = np.asarray(mat, dtype=float)
        m = self.n + 1
        if mat.shape[-2:] != (m, m):
            raise ConfigurationError(
                f"Translation({self.n}) element must be {m}x{m}, got {mat.shape}"
            )
        if self.drift(mat) > tol:
            raise ConfigurationError("translation matrix off its homogeneous pattern")


@dataclass(frozen=True)
class Product(GroupTag):
    """Direct product, represented block-diagonally in factor order."""

    factors: tuple[GroupTag, ...]

    def __post_init__(self):
        if not self.factors:
            raise ConfigurationError("Product requires at least one factor")

    @property
    def matrix_size(self) -> int:
        return sum(f.matrix_size for f in self.factors)

    @property
    def algebra_dim(self) -> int:
        return sum(f.algebra_dim for f in self.factors)

    @cached_property
    def block_slices(self) -> tuple[slice, ...]:
        out, k = [], 0
        for f in self.factors:
            out.append(slice(k, k + f.matrix_size))
            k += f.matrix_size
        return tuple(out)

    @cached_property
    def coord_slices(self) -> tuple[slice, ...]:
        out, k = [], 0
        for f in self.factors:
            out.append(slice(k, k + f.algebra_dim))
            k += f.algebra_dim
        return tuple(out)

    def _map_blocks(self, mat, op):
        mat = np.asarray(mat, dtype=float)
        out = np.zeros_like(mat)
        for f, s in zip(self.factors, self.block_slices):
            out[..., s, s] = op(f, mat[..., s, s])
        return out

    def hat(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (self.matrix_size, self.matrix_size))
        for f, bs, cs in zip(self.factors, self.block_slices, self.coord_slices):
            out[..., bs, bs] = f.hat(coords[..., cs])
        return out

    def vee(self, mat):
        mat = np.asarray(mat, dtype=float)
        return np.concatenate(
            [f.vee(mat[..., s, s]) for f, s in zip(self.factors, self.block_slices)],
            axis=-1,
        )

    def exp(self, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.zeros(coords.shape[:-1] + (self.matrix_size, self.matrix_size))
        for f, bs, cs in zip(self.factors, self.block_slices, self.coord_slices):
            out[..., bs, bs] = f.exp(coords[..., cs])
        return out

    def log(self, mat):
        mat = np.asarray(mat, dtype=float)
        return np.concatenate(
            [f.log(mat[..., s, s]) for f, s in zip(self.factors, self.block_slices)],
            axis=-1,
        )

    def inv(self, mat):
        return self._map_blocks(mat, lambda f, b: f.inv(b))

    def project(self, mat):
        return self._map_blocks(mat, lambda f, b: f.project(b))

    def drift_each(self, mat):
        mat = np.asarray(mat, dtype=float)
        off = mat.copy()
        for s in self.block_slices:
            off[..., s, s] = 0.0
        d = np.max(np.abs(off), axis=(-1, -2))
        for f, s in zip(self.factors, self.block_slices):
            d = np.maximum(d, f.drift_each(mat[..., s, s]))
        return d

    def check(self, mat, tol=ORTHONORMALITY_TOL):
        mat = np.asarray(mat, dtype=float)
        m = self.matrix_size
        if mat.shape[-2:] != (m, m):
            raise ConfigurationError(f"product element must be {m}x{m}")
        off = mat.copy()
        for s in self.block_slices:
            off[..., s, s] = 0.0
        if np.max(np.abs(off)) > tol:
            raise ConfigurationError("product element must be block-diagonal")
        for f, s in zip(self.factors, self.block_slices):
            f.check(mat[..., s, s], tol)


# ---------------------------------------------------------------------------
# wrapped values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupElement:
    """A group element: tag plus its standard matrix representation."""

    tag: GroupTag
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        self.tag.check(self.matrix)


@dataclass(frozen=True)
class AlgebraVector:
    """Lie algebra element in the fixed coordinate basis of its tag."""

    tag: GroupTag
    coords: np.ndarray

    def __post_init__(self):
        coords = np.atleast_1d(np.asarray(self.coords, dtype=float))
        if coords.shape != (self.tag.algebra_dim,):
            raise ConfigurationError(
                f"algebra coords must have length {self.tag.algebra_dim}, "
                f"got shape {coords.shape}"
            )
        object.__setattr__(self, "coords", _readonly(coords))

    @property
    def hat(self) -> np.ndarray:
        return self.tag.hat(self.coords)


@dataclass(frozen=True)
class AlgebraCovector:
    """Coordinate dual of AlgebraVector (length-d row in the dual basis)."""

    tag: GroupTag
    coords: np.ndarray

    def __post_init__(self):
        coords = np.atleast_1d(np.asarray(self.coords, dtype=float))
        if coords.shape != (self.tag.algebra_dim,):
            raise ConfigurationError(
                f"covector coords must have length {self.tag.algebra_dim}"
            )
        object.__setattr__(self, "coords", _readonly(coords))

    def pair(self, xi: AlgebraVector) -> float:
        _require_same_tag(self.tag, xi.tag)
        return float(self.coords @ xi.coords)


@dataclass(frozen=True)
class AlgebraMetric:
    """Symmetric positive-definite inner product on the algebra (inertia or
    dissipation), stored as its d x d coordinate matrix."""

    tag: GroupTag
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        d = self.tag.algebra_dim
        if mat.shape != (d, d):
            raise ConfigurationError(f"metric matrix must be {d}x{d}")
        if np.max(np.abs(mat - mat.T)) > 1e-12:
            raise ConfigurationError("metric matrix must be symmetric within 1e-12")
        if np.any(np.linalg.eigvalsh(mat) <= 0.0):
            raise ConfigurationError("metric matrix must be positive-definite")
        object.__setattr__(self, "matrix", _readonly(mat))

    @cached_property
    def _chol(self):
        return scipy.linalg.cho_factor(self.matrix)

    def flat_coords(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.matrix.T

    def sharp_coords(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return scipy.linalg.cho_solve(self._chol, coords.reshape(-1, coords.shape[-1]).T).T.reshape(coords.shape)

    def norm(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.sqrt(np.einsum("...i,ij,...j->...", coords, self.matrix, coords))


def identity_metric(tag: GroupTag) -> AlgebraMetric:
    return AlgebraMetric(tag, np.eye(tag.algebra_dim))


# ---------------------------------------------------------------------------
# group operations
# ---------------------------------------------------------------------------


def _require_same_tag(a: GroupTag, b: GroupTag) -> None:
    if a != b:
        raise TagMismatchError(f"tag mismatch: {a} vs {b}")


def identity(tag: GroupTag) -> GroupElement:
    return GroupElement(tag, tag.identity())


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product a * b, with orthonormality drift repair."""
    _require_same_tag(a.tag, b.tag)
    mat = a.matrix @ b.matrix
    if a.tag.drift(mat) > DRIFT_REPAIR_TOL:
        mat = a.tag.project(mat)
    return GroupElement(a.tag, mat)


def inverse(g: GroupElement) -> GroupElement:
    """Closed-form group inverse (transpose for rotations; never a matrix solve)."""
    return GroupElement(g.tag, g.tag.inv(g.matrix))


def exp(xi: AlgebraVector) -> GroupElement:
    """Group exponential of an algebra element."""
    return GroupElement(xi.tag, xi.tag.exp(xi.coords))


def log(g: GroupElement) -> AlgebraVector:
    """Principal logarithm; raises CutLocusError at/near the cut locus."""
    return AlgebraVector(g.tag, g.tag.log(g.matrix))


def Ad(g: GroupElement, xi: AlgebraVector) -> AlgebraVector:
    """Adjoint action vee(g hat(xi) g^-1)."""
    _require_same_tag(g.tag, xi.tag)
    return AlgebraVector(g.tag, ad_action_coords(g.tag, g.matrix, xi.coords))


def ad_action_coords(tag: GroupTag, g_mat: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Coordinate form of Ad_g, batched over leading axes."""
    return tag.vee(g_mat @ tag.hat(coords) @ tag.inv(g_mat))


@lru_cache(maxsize=None)
def structure_tensor(tag: GroupTag) -> np.ndarray:
    """T[k, i, j] = vee([B_i, B_j])_k for the tag's coordinate basis."""
    d = tag.algebra_dim
    basis = tag.basis
    t = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            t[:, i, j] = tag.vee(basis[i] @ basis[j] - basis[j] @ basis[i])
    return t


def ad_coords(tag: GroupTag, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coordinate Lie bracket [u, v], batched."""
    return np.einsum("kij,...i,...j->...k", structure_tensor(tag), u, v)


def ad_star_coords(tag: GroupTag, u: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Coadjoint operator: <ad*_u mu, v> = <mu, [u, v]>, batched."""
    return np.einsum("kij,...i,...k->...j", structure_tensor(tag), u, mu)


def ad(upsilon: AlgebraVector, eta: AlgebraVector) -> AlgebraVector:
    """Lie bracket, vee(hat(u) hat(v) - hat(v) hat(u))."""
    _require_same_tag(upsilon.tag, eta.tag)
    return AlgebraVector(upsilon.tag, ad_coords(upsilon.tag, upsilon.coords, eta.coords))


def ad_star(upsilon: AlgebraVector, mu: AlgebraCovector) -> AlgebraCovector:
    """Dual of ad(upsilon, .) applied to the covector mu."""
    _require_same_tag(upsilon.tag, mu.tag)
    return AlgebraCovector(
        upsilon.tag, ad_star_coords(upsilon.tag, upsilon.coords, mu.coords)
    )


def metric_flat(metric: AlgebraMetric, xi: AlgebraVector) -> AlgebraCovector:
    """Lower an index: covector M @ xi."""
    _require_same_tag(metric.tag, xi.tag)
    return AlgebraCovector(metric.tag, metric.flat_coords(xi.coords))


def metric_sharp(metric: AlgebraMetric, mu: AlgebraCovector) -> AlgebraVector:
    """Raise an index through the cached Cholesky factorization."""
    _require_same_tag(metric.tag, mu.tag)
    return AlgebraVector(metric.tag, metric.sharp_coords(mu.coords))


def direct_product(*elements: GroupElement) -> GroupElement:
    """Assemble a block-diagonal product element from per-factor elements."""
    tag = Product(tuple(g.tag for g in elements))
    mat = np.zeros((tag.matrix_size, tag.matrix_size))
    for g, s in zip(elements, tag.block_slices):
        mat[s, s] = g.matrix
    return GroupElement(tag, mat)


def factor_elements(g: GroupElement) -> list[GroupElement]:
    """Split a product element into its factors."""
    if not isinstance(g.tag, Product):
        raise TagMismatchError("factor_elements requires a Product-tagged element")
    return [
        GroupElement(f, g.matrix[s, s])
        for f, s in zip(g.tag.factors, g.tag.block_slices)
    ]
