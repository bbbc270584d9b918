"""Finite-dimensional uniformly convex sequence spaces and stock convex sets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .modulus import Modulus

MAX_DIMENSION = 16


@dataclass(frozen=True)
class NormedSpace:
    """``l_p^n`` with ``p >= 2``; ``p == 2`` is the Hilbert case."""

    dimension: int
    p: float = 2.0
    max_dimension: int = MAX_DIMENSION

    def __post_init__(self):
        if not (isinstance(self.dimension, (int, np.integer)) and self.dimension > 0):
            raise InputError(f"dimension must be a positive integer, got {self.dimension!r}")
        if self.dimension > self.max_dimension:
            raise InputError(f"dimension {self.dimension} exceeds cap {self.max_dimension}")
        if not self.p >= 2:
            raise InputError(f"exponent p must be >= 2, got {self.p!r}")

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2

    @property
    def conjugate_exponent(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def modulus(self) -> Modulus:
        return Modulus(
            lambda e: delta_X(self, e),
            "clarkson" if self.p > 2 else "hilbert_eps2_over_8",
            {"p": self.p, "clamp": 0.5},
            (0.0, 2.0),
        )

    @property
    def power_type_constant(self) -> float:
        """``A`` with ``delta_X(eps) >= A eps^p`` on ``(0, 2]``; ``A < 1/2``."""
        return 1.0 / (self.p * 2.0**self.p)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise InputError(f"expected vectors of dimension {self.dimension}, got shape {x.shape}")
        return x

    def norm(self, x):
        return norm(self, x)

    def dual_norm(self, u):
        u = self.check(u)
        return _lp(u, self.conjugate_exponent)


def _lp(x: np.ndarray, p: float):
    a = np.abs(x)
    if p == 2:
        return np.sqrt(np.sum(a * a, axis=-1))
    # rescale by the max entry to keep a**p finite
    m = np.max(a, axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((a / safe[..., None]) ** p, axis=-1) ** (1.0 / p)


def norm(space: NormedSpace, x):
    """``(sum |x_i|^p)^(1/p)``; accepts a single vector or a stack of them."""
    x = space.check(x)
    out = _lp(x, space.p)
    return float(out) if np.ndim(out) == 0 else out


def delta_X(space: NormedSpace, eps: float) -> float:
    """Modulus of uniform convexity of ``space``, clamped to ``[0, 1/2]``.

    Beyond ``eps = 2`` the defining property is vacuous, so the value at 2 is
    reused.
    """
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps!r}")
    e = min(float(eps), 2.0)
    if space.p == 2:
        d = e * e / 8.0
    else:
        u = (e / 2.0) ** space.p
        # 1 - (1-u)^(1/p) without cancellation
        d = 1.0 if u >= 1.0 else -math.expm1(math.log1p(-u) / space.p)
    return min(d, 0.5)


def delta_X_inverse(space: NormedSpace, s: float) -> float:
    """Monotone inverse of the clamped modulus, capped at the diameter 2."""
    return space.modulus.inverse(s, cap=2.0)


def duality_element(space: NormedSpace, phi, x) -> np.ndarray:
    """The unique element of ``J_phi(x)``; ``phi`` is the density or its value at ``||x||``."""
    x = space.check(x)
    nx = norm(space, x)
    if nx == 0:
        raise InputError("duality_element needs x != 0 (J_phi(0) = {0})")
    scale = phi(nx) if callable(phi) else float(phi)
    if scale < 0:
        raise InputError("phi value must be nonnegative")
    p = space.p
    y = x / nx
    return scale * np.sign(y) * np.abs(y) ** (p - 1.0)


def projection_continuity_bound(R: float, r: float, delta_X_inverse: Callable[[float], float]) -> float:
    """``(R + r) * delta_X^{-1}(2r / (R + r))`` for ``y`` in ``B(x, r)`` and ``d_C(x) < R``."""
    if not (R > 0 and 0 < r < R):
        raise InputError(f"need 0 < r < R, got r={r!r}, R={R!r}")
    return (R + r) * float(delta_X_inverse(2.0 * r / (R + r)))


# ---------------------------------------------------------------- convex sets


class ConvexSet:
    """Closed convex set with a support function and optional closed-form projection."""

    kind = "set"

    def contains(self, x, tol: float = 1e-12) -> bool:
        raise NotImplementedError

    def support(self, u) -> float:
        """``sigma_C(u) = sup_{y in C} <u, y>`` (may be +inf)."""
        raise NotImplementedError

    def dual_project(self, u) -> np.ndarray:
        """A point of ``dom sigma_C`` near ``u``."""
        return np.asarray(u, dtype=float)

    def closed_form_projection(self, space: NormedSpace, x):
        return None

    def member(self) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float
    p: float = 2.0
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius >= 0:
            raise InputError("ball radius must be nonnegative")

    def contains(self, x, tol=1e-12):
        return bool(_lp(np.asarray(x, float) - self.center, self.p) <= self.radius * (1 + tol) + tol)

    def support(self, u):
        u = np.asarray(u, float)
        return float(u @ self.center + self.radius * _lp(u, self.p / (self.p - 1.0)))

    def closed_form_projection(self, space, x):
        if space.p != self.p:
            return None
        d = np.asarray(x, float) - self.center
        nd = _lp(d, self.p)
        if nd <= self.radius:
            return np.array(x, dtype=float)
        # radial retraction is a nearest point for the ball of the ambient norm
        return self.center + d * (self.radius / nd)

    def member(self):
        return self.center.copy()

    def to_json(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius, "p": self.p}


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray
    kind = "box"

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise InputError("box needs matching bounds with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x, tol=1e-12):
        x = np.asarray(x, float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def support(self, u):
        u = np.asarray(u, float)
        total = 0.0
        for ui, lo, hi in zip(u, self.lower, self.upper):
            if ui > 0:
                total += ui * hi
            elif ui < 0:
                total += ui * lo
        return float(total)

    def dual_project(self, u):
        u = np.array(u, dtype=float)
        u[(u > 0) & np.isinf(self.upper)] = 0.0
        u[(u < 0) & np.isinf(self.lower)] = 0.0
        return u

    def closed_form_projection(self, space, x):
        # l_p^p is separable, so coordinate clipping is exact for every p
        return np.clip(np.asarray(x, float), self.lower, self.upper)

    def member(self):
        return np.clip(np.zeros_like(self.lower), self.lower, self.upper)

    def to_json(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """``{y : <normal, y> <= offset}``."""

    normal: np.ndarray
    offset: float
    kind = "halfspace"

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float)
        if not np.any(a):
            raise InputError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", a)

    def contains(self, x, tol=1e-12):
        return bool(self.normal @ np.asarray(x, float) <= self.offset + tol * (1 + abs(self.offset)))

    def _ray_coeff(self, u):
        a = self.normal
        return (np.asarray(u, float) @ a) / (a @ a)

    def support(self, u):
        u = np.asarray(u, float)
        t = self._ray_coeff(u)
        if t < 0 or not np.allclose(u, t * self.normal, rtol=0, atol=1e-14 * (1 + np.abs(u).max())):
            return math.inf
        return float(t * self.offset)

    def dual_project(self, u):
        return max(self._ray_coeff(u), 0.0) * self.normal

    def closed_form_projection(self, space, x):
        x = np.asarray(x, float)
        excess = self.normal @ x - self.offset
        if excess <= 0:
            return x.copy()
        q = space.conjugate_exponent
        # minimal l_p vector d with <a, d> = excess (Hoelder equality case)
        j = np.sign(self.normal) * np.abs(self.normal) ** (q - 1.0)
        return x - excess * j / (self.normal @ j)

    def member(self):
        a = self.normal
        return a * (min(self.offset, 0.0) / (a @ a))

    def to_json(self):
        return {"kind": "halfspace", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class AffineSubspace(ConvexSet):
    """``{point + B^T c}`` where the rows of ``basis`` span the direction space."""

    basis: np.ndarray
    point: np.ndarray
    kind = "affine"

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        pt = np.asarray(self.point, dtype=float)
        if b.shape[1] != pt.shape[0]:
            raise InputError("affine basis rows must match the point dimension")
        q, _ = np.linalg.qr(b.T)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "point", pt)
        object.__setattr__(self, "_orth", q[:, : np.linalg.matrix_rank(b)])

    def _residual(self, v):
        v = np.asarray(v, float)
        return v - self._orth @ (self._orth.T @ v)

    def contains(self, x, tol=1e-12):
        r = self._residual(np.asarray(x, float) - self.point)
        return bool(np.linalg.norm(r) <= tol * (1 + np.linalg.norm(x)))

    def support(self, u):
        u = np.asarray(u, float)
        along = self._orth.T @ u
        if np.linalg.norm(along) > 1e-14 * (1 + np.linalg.norm(u)):
            return math.inf
        return float(u @ self.point)

    def dual_project(self, u):
        return self._residual(u)

    def closed_form_projection(self, space, x):
        if not space.is_hilbert:
            return None
        return self.point + self._orth @ (self._orth.T @ (np.asarray(x, float) - self.point))

    def member(self):
        return self.point.copy()

    def to_json(self):
        return {"kind": "affine", "basis": self.basis.tolist(), "point": self.point.tolist()}


def project(space: NormedSpace, cset: ConvexSet, x) -> np.ndarray:
    """Nearest point of ``cset`` to ``x`` in the norm of ``space``.

    Uses an exact formula when one exists and otherwise the certified prox
    solver applied to the indicator of ``cset``.
    """
    x = space.check(x)
    exact = cset.closed_form_projection(space, x)
    if exact is not None:
        return exact
    from .prox import Indicator, project_certified

    return project_certified(space, Indicator(cset), x).minimizer
