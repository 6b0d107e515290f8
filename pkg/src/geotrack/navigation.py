"""Navigation functions and their differentials.

Two families: the sphere potential -k_P <origin, q> and the group potential
tr(K_R (1 - R)) + x^T K_x x (with the obvious restrictions to pure rotation
or pure translation factors), extended to products by summation.  The
body-frame gradient map ``zeta`` is implemented in closed form per factor
and must match the directional-derivative definition

    <zeta(g), eta> = d/dt P(g exp(t eta)) |_{t=0},

which the test suite enforces by finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    SE3,
    SO,
    AlgebraCovector,
    GroupElement,
    GroupTag,
    Product,
    Translation,
    _readonly,
)
from .errors import ConfigurationError, TagMismatchError
from .sphere import SphereCovector, SpherePoint, origin as sphere_origin


@dataclass(frozen=True)
class SphereNavigation:
    """Height potential on S^n: q -> -k_p <origin, q>."""

    k_p: float = 1.0
    origin: np.ndarray | None = None

    def __post_init__(self):
        if self.k_p <= 0:
            raise ConfigurationError("sphere navigation gain must be positive", "k_p")
        if self.origin is not None:
            o = np.asarray(self.origin, dtype=float)
            if abs(np.linalg.norm(o) - 1.0) > 1e-9:
                raise ConfigurationError("navigation origin must be a unit vector")
            object.__setattr__(self, "origin", _readonly(o))

    def origin_for(self, q: np.ndarray) -> np.ndarray:
        if self.origin is not None:
            return self.origin
        return sphere_origin(np.asarray(q).shape[-1] - 1)

    def value(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return -self.k_p * np.sum(self.origin_for(q) * q, axis=-1)

    def differential_row(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        o = self.origin_for(q)
        return -self.k_p * (o - np.sum(o * q, axis=-1, keepdims=True) * q)


def sphere_nav_value(P: SphereNavigation, q: SpherePoint) -> float:
    return float(P.value(q.coords))


def sphere_nav_differential(P: SphereNavigation, q: SpherePoint) -> SphereCovector:
    """Differential row -k_p origin^T (1 - q q^T); vanishes only at +-origin."""
    return SphereCovector(q, P.differential_row(q.coords))


def _check_rotation_gains(K: np.ndarray, m: int) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (m, m):
        raise ConfigurationError(f"rotation gain matrix must be {m}x{m}", "K_R")
    if np.max(np.abs(K - K.T)) > 1e-12:
        raise ConfigurationError("rotation gain matrix must be symmetric", "K_R")
    eig = np.sort(np.linalg.eigvalsh(K))
    if np.min(np.diff(eig)) <= 1e-6:
        raise ConfigurationError(
            "rotation gain matrix must have distinct eigenvalues (gap > 1e-6)", "K_R"
        )
    return K


def _check_translation_gains(K: np.ndarray, n: int) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim == 0:
        K = float(K) * np.eye(n)
    if K.shape != (n, n):
        raise ConfigurationError(f"translation gain matrix must be {n}x{n}", "K_x")
    if np.max(np.abs(K - K.T)) > 1e-12 or np.any(np.linalg.eigvalsh(K) <= 0):
        raise ConfigurationError("translation gain matrix must be SPD", "K_x")
    return K


@dataclass(frozen=True)
class GroupNavigation:
    """Navigation function on a matrix group; products sum over factors.

    For a rotation factor the term is tr(K_R (1 - R)); for a translation
    factor (or the translation block of SE(3)) it is x^T K_x x.
    """

    tag: GroupTag
    K_R: np.ndarray | None = None
    K_x: np.ndarray | None = None
    factors: tuple["GroupNavigation", ...] = field(default=())

    def __post_init__(self):
        tag = self.tag
        if isinstance(tag, Product):
            if len(self.factors) != len(tag.factors):
                raise ConfigurationError("product navigation needs one factor per group factor")
            for nav, ft in zip(self.factors, tag.factors):
                if nav.tag != ft:
                    raise TagMismatchError("navigation factor tags must match the group")
            return
        if isinstance(tag, SO):
            if self.K_R is None:
                raise ConfigurationError("rotation navigation requires K_R", "K_R")
            object.__setattr__(self, "K_R", _readonly(_check_rotation_gains(self.K_R, tag.m)))
        elif isinstance(tag, SE3):
            if self.K_R is None or self.K_x is None:
                raise ConfigurationError("SE(3) navigation requires K_R and K_x")
            object.__setattr__(self, "K_R", _readonly(_check_rotation_gains(self.K_R, 3)))
            object.__setattr__(self, "K_x", _readonly(_check_translation_gains(self.K_x, 3)))
        elif isinstance(tag, Translation):
            if self.K_x is None:
                raise ConfigurationError("translation navigation requires K_x", "K_x")
            object.__setattr__(self, "K_x", _readonly(_check_translation_gains(self.K_x, tag.n)))
        else:
            raise ConfigurationError(f"no navigation function for tag {tag}")

    # -- raw-matrix implementations, batched over leading axes --------------

    def value_matrix(self, mat: np.ndarray) -> np.ndarray:
        mat = np.asarray(mat, dtype=float)
        tag = self.tag
        if isinstance(tag, Product):
            return sum(
                nav.value_matrix(mat[..., s, s])
                for nav, s in zip(self.factors, tag.block_slices)
            )
        if isinstance(tag, SO):
            rel = np.eye(tag.m) - mat
            return np.einsum("ij,...ji->...", self.K_R, rel)
        if isinstance(tag, SE3):
            rel = np.eye(3) - mat[..., :3, :3]
            x = mat[..., :3, 3]
            return np.einsum("ij,...ji->...", self.K_R, rel) + np.einsum(
                "...i,ij,...j->...", x, self.K_x, x
            )
        x = mat[..., : tag.n, tag.n]
        return np.einsum("...i,ij,...j->...", x, self.K_x, x)

    def zeta_coords(self, mat: np.ndarray) -> np.ndarray:
        """Body-frame gradient: <zeta(g), eta> = d/dt P(g exp(t eta))|_0."""
        mat = np.asarray(mat, dtype=float)
        tag = self.tag
        if isinstance(tag, Product):
            return np.concatenate(
                [
                    nav.zeta_coords(mat[..., s, s])
                    for nav, s in zip(self.factors, tag.block_slices)
                ],
                axis=-1,
            )
        if isinstance(tag, SO):
            # d/dt tr(K (1 - R e^{t B_k})) = -tr(K R B_k)
            kr = np.einsum("ij,...jk->...ik", self.K_R, mat)
            return -np.einsum("...ik,dki->...d", kr, SO(tag.m).basis)
        if isinstance(tag, SE3):
            R = mat[..., :3, :3]
            x = mat[..., :3, 3]
            kr = np.einsum("ij,...jk->...ik", self.K_R, R)
            zr = -np.einsum("...ik,dki->...d", kr, SO(3).basis)
            zx = 2.0 * np.einsum("...ji,jk,...k->...i", R, self.K_x, x)
            return np.concatenate([zx, zr], axis=-1)
        x = mat[..., : tag.n, tag.n]
        return 2.0 * np.einsum("ij,...j->...i", self.K_x, x)


def rotation_navigation(K_R: np.ndarray, m: int = 3) -> GroupNavigation:
    return GroupNavigation(SO(m), K_R=K_R)


def se3_navigation(K_R: np.ndarray, K_x: np.ndarray) -> GroupNavigation:
    return GroupNavigation(SE3(), K_R=K_R, K_x=K_x)


def translation_navigation(K_x, n: int = 3) -> GroupNavigation:
    return GroupNavigation(Translation(n), K_x=_check_translation_gains(K_x, n))


def product_navigation(*factors: GroupNavigation) -> GroupNavigation:
    tag = Product(tuple(nav.tag for nav in factors))
    return GroupNavigation(tag, factors=tuple(factors))


def group_nav_value(P: GroupNavigation, g: GroupElement) -> float:
    if g.tag != P.tag:
        raise TagMismatchError("navigation tag does not match the group element")
    return float(P.value_matrix(g.matrix))


def zeta_P(P: GroupNavigation, g: GroupElement) -> AlgebraCovector:
    """Left-trivialized differential of the navigation function at g."""
    if g.tag != P.tag:
        raise TagMismatchError("navigation tag does not match the group element")
    return AlgebraCovector(g.tag, P.zeta_coords(g.matrix))
