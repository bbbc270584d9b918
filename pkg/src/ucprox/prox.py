"""Certified proximal mappings.

Every solve returns a primal point together with a Fenchel dual certificate:
``gap`` bounds the objective excess over the true minimum and
``distance_bound`` turns it into a distance through the uniform convexity of
the regularizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls

from .errors import InfeasibleError, InputError, SolverError
from .moduli import ball_modulus, composed_modulus
from .modulus import Modulus
from .spaces import ConvexSet, NormedSpace, _lp
from .young import YoungFunction

DEFAULT_TOL = 1e-8
DEFAULT_BUDGET = 100_000
KELLEY_MAX_CUTS = 400
_EPS = np.finfo(float).eps


# --------------------------------------------------------------- objectives


class ConvexFunction:
    """Proper convex lsc function given by oracles.

    ``evaluate`` maps a vector to a value in ``(-inf, inf]``.  ``subgradient``
    returns one element of the subdifferential, ``domain_point(target, radius)``
    returns ``(z, bound)`` with ``z`` in the domain within ``radius`` of the
    nearest domain point to ``target`` and ``f(z) <= bound``.
    """

    kind = "generic"

    def __init__(self, evaluate=None, subgradient=None, domain_point=None, label="generic"):
        self._evaluate = evaluate
        self._subgradient = subgradient
        self._domain_point = domain_point
        self.label = label

    def __call__(self, y) -> float:
        return float(self._evaluate(np.asarray(y, dtype=float)))

    def evaluate_many(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        return np.array([self(y) for y in Y.reshape(-1, Y.shape[-1])]).reshape(Y.shape[:-1])

    def subgradient(self, y):
        if self._subgradient is None:
            return None
        return np.asarray(self._subgradient(np.asarray(y, dtype=float)), dtype=float)

    def conjugate(self, u) -> float:
        raise NotImplementedError

    def dual_project(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def domain_point(self, target, radius=0.0):
        target = np.asarray(target, dtype=float)
        if self._domain_point is not None:
            z, bound = self._domain_point(target, radius)
            return np.asarray(z, dtype=float), float(bound)
        value = self(target)
        if not math.isfinite(value):
            raise InfeasibleError(f"{self.label}: no domain point oracle and f(target) = inf")
        return target.copy(), value

    def to_json(self) -> dict:
        return {"kind": self.kind, "label": self.label}


class Zero(ConvexFunction):
    kind = "zero"

    def __init__(self):
        super().__init__(label="zero")

    def __call__(self, y):
        return 0.0

    def evaluate_many(self, Y):
        return np.zeros(np.shape(Y)[:-1])

    def subgradient(self, y):
        return np.zeros(np.shape(y))

    def conjugate(self, u):
        return 0.0 if not np.any(u) else math.inf

    def dual_project(self, u):
        return np.zeros(np.shape(u))


class Quadratic(ConvexFunction):
    """``y -> <Qy, y>/2 + <b, y>`` with ``Q`` symmetric positive semidefinite."""

    kind = "quadratic"

    def __init__(self, Q, b=None):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T, atol=1e-12):
            raise InputError("Q must be a symmetric square matrix")
        w, V = np.linalg.eigh(Q)
        if w.min() < -1e-12 * max(1.0, abs(w).max()):
            raise InputError("Q must be positive semidefinite")
        super().__init__(label="quadratic")
        self.Q = Q
        self.b = np.zeros(len(Q)) if b is None else np.asarray(b, dtype=float)
        keep = w > 1e-12 * max(1.0, w.max())
        self._w = w[keep]
        self._V = V[:, keep]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ self.Q @ y + self.b @ y)

    def evaluate_many(self, Y):
        Y = np.asarray(Y, dtype=float)
        return 0.5 * np.einsum("...i,ij,...j->...", Y, self.Q, Y) + Y @ self.b

    def subgradient(self, y):
        return self.Q @ np.asarray(y, dtype=float) + self.b

    def dual_project(self, u):
        d = np.asarray(u, dtype=float) - self.b
        return self.b + self._V @ (self._V.T @ d)

    def conjugate(self, u):
        c = self._V.T @ (np.asarray(u, dtype=float) - self.b)
        return float(0.5 * np.sum(c * c / self._w))

    def to_json(self):
        return {"kind": "quadratic", "Q": self.Q.tolist(), "b": self.b.tolist()}


class Indicator(ConvexFunction):
    kind = "indicator"

    def __init__(self, cset: ConvexSet):
        super().__init__(label=f"indicator({cset.kind})")
        self.set = cset

    def __call__(self, y):
        return 0.0 if self.set.contains(y) else math.inf

    def evaluate_many(self, Y):
        Y = np.asarray(Y, dtype=float)
        flat = Y.reshape(-1, Y.shape[-1])
        out = np.array([0.0 if self.set.contains(y) else math.inf for y in flat])
        return out.reshape(Y.shape[:-1])

    def subgradient(self, y):
        return np.zeros(np.shape(y)) if self.set.contains(y) else None

    def conjugate(self, u):
        return self.set.support(u)

    def dual_project(self, u):
        return self.set.dual_project(u)

    def domain_point(self, target, radius=0.0, space: NormedSpace | None = None):
        from .spaces import project

        target = np.asarray(target, dtype=float)
        space = space or NormedSpace(len(target), 2.0)
        return project(space, self.set, target), 0.0

    def to_json(self):
        return {"kind": "indicator", "set": self.set.to_json()}


class BoxIndicator(Indicator):
    """Vectorized membership for boxes; the grid oracle evaluates millions of points."""

    def evaluate_many(self, Y):
        Y = np.asarray(Y, dtype=float)
        ok = np.all((Y >= self.set.lower - 1e-12) & (Y <= self.set.upper + 1e-12), axis=-1)
        return np.where(ok, 0.0, math.inf)


class BallIndicator(Indicator):
    def evaluate_many(self, Y):
        Y = np.asarray(Y, dtype=float)
        s = self.set
        ok = _lp(Y - s.center, s.p) <= s.radius * (1 + 1e-12) + 1e-12
        return np.where(ok, 0.0, math.inf)


def indicator(cset: ConvexSet) -> Indicator:
    from .spaces import Ball, Box

    if isinstance(cset, Box):
        return BoxIndicator(cset)
    if isinstance(cset, Ball):
        return BallIndicator(cset)
    return Indicator(cset)


class L1Norm(ConvexFunction):
    """``y -> weight * sum |y_i|``."""

    kind = "l1"

    def __init__(self, weight: float = 1.0):
        if not weight > 0:
            raise InputError("l1 weight must be positive")
        super().__init__(label="l1")
        self.weight = float(weight)

    def __call__(self, y):
        return float(self.weight * np.sum(np.abs(y)))

    def evaluate_many(self, Y):
        return self.weight * np.sum(np.abs(Y), axis=-1)

    def subgradient(self, y):
        return self.weight * np.sign(np.asarray(y, dtype=float))

    def conjugate(self, u):
        u = np.asarray(u, dtype=float)
        return 0.0 if np.max(np.abs(u)) <= self.weight else math.inf

    def dual_project(self, u):
        return np.clip(np.asarray(u, dtype=float), -self.weight, self.weight)

    def to_json(self):
        return {"kind": "l1", "weight": self.weight}


class MaxAffine(ConvexFunction):
    """``y -> max_i <a_i, y> + c_i`` (rows of ``A``)."""

    kind = "max_affine"

    def __init__(self, A, c):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        c = np.asarray(c, dtype=float).reshape(-1)
        if len(A) != len(c) or len(c) == 0:
            raise InputError("max_affine needs as many offsets as slopes")
        super().__init__(label="max_affine")
        self.A = A
        self.c = c

    def __call__(self, y):
        return float(np.max(self.A @ np.asarray(y, dtype=float) + self.c))

    def evaluate_many(self, Y):
        return np.max(np.asarray(Y, dtype=float) @ self.A.T + self.c, axis=-1)

    def subgradient(self, y):
        return self.A[int(np.argmax(self.A @ np.asarray(y, dtype=float) + self.c))].copy()

    def conjugate(self, u):
        # f*(u) = min{-<theta, c> : theta in simplex, A^T theta = u}; only
        # used at points built from simplex weights, see _maxaffine_dual
        raise NotImplementedError("use simplex weights")

    def to_json(self):
        return {"kind": "max_affine", "A": self.A.tolist(), "c": self.c.tolist()}


# -------------------------------------------------------------- regularizer


@dataclass(frozen=True)
class _Reg:
    """``y -> a * Phi(||x - y|| / b)``."""

    space: NormedSpace
    F: YoungFunction
    x: np.ndarray
    a: float
    b: float

    def value(self, y):
        return self.a * self.F.eval(self.space.norm(self.x - y) / self.b)

    def value_many(self, Y):
        return self.a * self.F.eval(_lp(self.x - Y, self.space.p) / self.b)

    def grad(self, y):
        v = self.x - np.asarray(y, dtype=float)
        n = _lp(v, self.space.p)
        if n == 0:
            return np.zeros_like(v)
        w = v / n
        direction = np.sign(w) * np.abs(w) ** (self.space.p - 1.0)
        return -(self.a / self.b) * self.F.density(n / self.b) * direction

    def conj_neg(self, u):
        """``g*(-u) = -<u, x> + a Phi*(b ||u||_* / a)``."""
        s = self.b * self.space.dual_norm(u) / self.a
        return float(-u @ self.x + self.a * self.F.conjugate(s)), float(abs(u @ self.x))

    def growth_radius(self, slope: float, level: float) -> float:
        """Largest ``t`` with ``a Phi(t/b) - slope t <= level``."""
        def excess(t):
            return self.a * self.F.eval(t / self.b) - slope * t - level

        hi = max(1e-12, self.b)
        while excess(hi) <= 0:
            hi *= 2.0
            if hi > 1e300:
                raise SolverError("regularizer growth bound diverged")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) <= 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * hi:
                break
        return hi

    def lipschitz(self, r):
        return self.a * self.F.density(r / self.b) / self.b


def _reg(space, F, x, lam, kind):
    if not 0 < lam <= 1:
        raise InputError(f"lam must lie in (0, 1], got {lam!r}")
    if kind == "young":
        return _Reg(space, F, x, 1.0 / F.density(lam), 1.0)
    if kind == "pr":
        return _Reg(space, F, x, lam, lam)
    raise InputError(f"unknown prox kind {kind!r}")


# ------------------------------------------------------------------ results


@dataclass
class ProxResult:
    minimizer: np.ndarray
    objective: float
    gap: float
    distance_bound: float
    dual: np.ndarray | None = None
    radius: float = 0.0
    lam: float = 1.0
    kind: str = "young"
    value_slack: float = 0.0
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "minimizer": [float(v) for v in self.minimizer],
            "objective": float(self.objective),
            "gap": float(self.gap),
            "distance_bound": float(self.distance_bound),
            "radius": float(self.radius),
            "lam": float(self.lam),
            "kind": self.kind,
        }


def certified_gap_to_distance(
    F: YoungFunction,
    space_modulus: Modulus,
    r0: float,
    lam: float,
    gap: float,
    kind: str = "young",
    extra: Modulus | None = None,
) -> float:
    """Distance from an approximate to the true minimizer given a certified gap.

    For ``Phi(||x - y||)/phi(lam)`` the midpoint inequality gives
    ``delta_r0(d) <= phi(lam) gap / 2``; for ``lam Phi(||x - y||/lam)`` it gives
    ``delta_{r0/lam}(d/lam) <= gap / (2 lam)``.  ``extra`` is another valid
    modulus on the same ball, combined by pointwise maximum.
    """
    if not gap >= 0:
        raise InputError("gap must be nonnegative")
    if not r0 > 0:
        raise InputError("r0 must be positive")
    if gap == 0:
        return 0.0
    if kind == "young":
        mod = composed_modulus(space_modulus, F, r0)
        target, scale, cap = F.density(lam) * gap / 2.0, 1.0, 2.0 * r0
    else:
        mod = composed_modulus(space_modulus, F, r0 / lam)
        target, scale, cap = gap / (2.0 * lam), lam, 2.0 * r0 / lam
    # the inverse of a pointwise max is the min of the inverses; one probe of
    # the (expensive) composition formula decides whether it can win
    best = cap
    if extra is not None:
        best = extra.inverse(target, cap=cap)
    try:
        if best == cap or mod(best) > target:
            best = min(best, mod.inverse(target, cap=cap))
    except InputError:
        pass  # the formula underflows on microscopic balls; keep the other bound
    return scale * best


# ------------------------------------------------------------------ solvers


def _lbfgs(fun, z0, budget, bounds=None):
    res = minimize(
        fun, z0, jac=True, method="L-BFGS-B", bounds=bounds,
        options={"maxiter": budget, "maxfun": budget, "ftol": 1e-15, "gtol": 1e-13, "maxcor": 20},
    )
    return res.x


def _solve_smooth(f, reg, x, budget):
    """Quadratic objective: quasi-Newton on ``w = (y - x)/b``.

    The scaling keeps the first line-search steps inside the range where
    ``Phi(||w||)`` is finite, which matters for exp and cosh at small lambda.
    """
    b = reg.b

    def fun(w):
        y = x + b * w
        return f(y) + reg.value(y), b * (f.subgradient(y) + reg.grad(y))

    w = _lbfgs(fun, np.zeros_like(x), budget)
    # second pass from the first answer tightens the certificate
    return x + b * _lbfgs(fun, w, budget)


def _solve_l1(f, reg, x, budget):
    n = len(x)
    w = f.weight
    b = reg.b

    def fun(z):
        y = b * (z[:n] - z[n:])
        g = b * reg.grad(y)
        return w * b * np.sum(z) + reg.value(y), np.concatenate([w * b + g, w * b - g])

    z0 = np.concatenate([np.maximum(x, 0), np.maximum(-x, 0)]) / b
    z = _lbfgs(fun, z0, budget, bounds=[(0, None)] * (2 * n))
    z = _lbfgs(fun, z, budget, bounds=[(0, None)] * (2 * n))
    y = b * (z[:n] - z[n:])
    snapped = np.where(np.abs(y) < 1e-9, 0.0, y)
    return snapped if f(snapped) + reg.value(snapped) <= f(y) + reg.value(y) else y


def _l1_dual(f, reg, u0, budget):
    """Maximize ``<u, x> - a Phi*(b ||u||_* / a)`` over ``||u||_inf <= w``; returns ``(u, y)``.

    ``y`` is the primal point recovered from ``u = -grad g(y)``.
    """
    q = reg.space.conjugate_exponent
    w = f.weight

    def neg(u):
        nu = _lp(u, q)
        s = reg.b * nu / reg.a
        val = u @ reg.x - reg.a * reg.F.conjugate(s)
        if nu == 0:
            return -val, -reg.x
        direction = np.sign(u) * np.abs(u / nu) ** (q - 1.0)
        return -val, -(reg.x - reg.b * reg.F.density_inverse(s) * direction)

    u = _lbfgs(neg, np.clip(u0, -w, w), budget, bounds=[(-w, w)] * len(u0))
    nu = _lp(u, q)
    if nu == 0:
        return u, reg.x.copy()
    direction = np.sign(u) * np.abs(u / nu) ** (q - 1.0)
    return u, reg.x - reg.b * reg.F.density_inverse(reg.b * nu / reg.a) * direction


def _solve_epigraph(A, c, reg, x, budget):
    """``min t + g(y)`` subject to ``t >= a_i y + c_i``, in ``w = (y - x)/b``."""
    n = len(x)
    b = reg.b
    t0 = float(np.max(A @ x + c))
    Ab = b * A
    cons = {
        "type": "ineq",
        "fun": lambda z: z[n] - A @ (x + b * z[:n]) - c,
        "jac": lambda z: np.hstack([-Ab, np.ones((len(c), 1))]),
    }

    def fun(z):
        y = x + b * z[:n]
        return z[n] + reg.value(y), np.append(b * reg.grad(y), 1.0)

    res = minimize(fun, np.append(np.zeros(n), t0), jac=True, method="SLSQP", constraints=[cons],
                   options={"maxiter": min(budget, 2000), "ftol": 1e-16})
    return x + b * res.x[:n]


def _maxaffine_dual(A, c, reg, u_hint):
    """Maximize the concave dual over simplex weights; returns ``(D, u, terms)``."""
    m = len(c)
    q = reg.space.conjugate_exponent

    def dual(theta):
        u = A.T @ theta
        conj, scale = reg.conj_neg(u)
        return float(theta @ c) - conj, u, abs(float(theta @ c)) + scale + abs(conj)

    def neg(theta):
        u = A.T @ theta
        nu = _lp(u, q)
        s = reg.b * nu / reg.a
        grad_norm = np.zeros_like(u) if nu == 0 else np.sign(u) * np.abs(u / nu) ** (q - 1.0)
        grad = c + A @ reg.x - reg.b * reg.F.density_inverse(s) * (A @ grad_norm)
        return -dual(theta)[0], -grad

    # warm start: simplex weights whose combination is closest to the hint
    M = np.vstack([A.T, 1e3 * np.ones(m)])
    theta0, _ = nnls(M, np.append(u_hint, 1e3))
    theta0 = theta0 / theta0.sum() if theta0.sum() > 0 else np.full(m, 1.0 / m)
    best = dual(theta0)
    res = minimize(neg, theta0, jac=True, method="SLSQP", bounds=[(0, 1)] * m,
                   constraints=[{"type": "eq", "fun": lambda t: np.sum(t) - 1.0, "jac": lambda t: np.ones(m)}],
                   options={"maxiter": 500, "ftol": 1e-16})
    theta = np.clip(res.x, 0, None)
    if theta.sum() > 0:
        cand = dual(theta / theta.sum())
        if cand[0] > best[0]:
            best = cand
    return best


def _certify(f, reg, y):
    """Fenchel dual lower bound at ``u = -grad g(y)`` pushed into ``dom f*``."""
    u = f.dual_project(-reg.grad(y))
    fc = f.conjugate(u)
    conj, scale = reg.conj_neg(u)
    return -fc - conj, u, abs(fc) + scale + abs(conj)


def _solve_projection(space, cset, x, budget):
    exact = cset.closed_form_projection(space, x)
    if exact is not None:
        return exact
    from .spaces import AffineSubspace, Ball

    p = space.p
    if isinstance(cset, AffineSubspace):
        B = cset._orth

        def fun(c):
            v = x - cset.point - B @ c
            n = _lp(v, p)
            if n == 0:
                return 0.0, np.zeros_like(c)
            w = v / n
            return n**p / p, -(B.T @ (n ** (p - 1.0) * np.sign(w) * np.abs(w) ** (p - 1.0)))

        c0 = B.T @ (x - cset.point)
        c = _lbfgs(fun, c0, budget)
        return cset.point + B @ c
    if isinstance(cset, Ball):
        r, q, ctr = cset.radius, cset.p, cset.center
        if _lp(x - ctr, q) <= r:
            return x.copy()

        def obj(y):
            v = x - y
            n = _lp(v, p)
            if n == 0:
                return 0.0, np.zeros_like(v)
            w = v / n
            return n**p / p, -(n ** (p - 1.0)) * np.sign(w) * np.abs(w) ** (p - 1.0)

        cons = {
            "type": "ineq",
            "fun": lambda y: r**q - np.sum(np.abs(y - ctr) ** q),
            "jac": lambda y: -q * np.sign(y - ctr) * np.abs(y - ctr) ** (q - 1.0),
        }
        y0 = ctr + (x - ctr) * (r / _lp(x - ctr, q))
        res = minimize(obj, y0, jac=True, method="SLSQP", constraints=[cons],
                       options={"maxiter": min(budget, 2000), "ftol": 1e-18})
        y = res.x
        d = _lp(y - ctr, q)
        # radial retraction restores exact feasibility
        if d > r:
            y = ctr + (y - ctr) * (r / d) * (1 - 4 * _EPS)
        return y
    raise SolverError(f"no projection routine for set kind {cset.kind!r}")


def _kelley(f, reg, x, tol, budget):
    """Cutting planes for an oracle-only f; the cut model certifies the lower bound."""
    fx = f(x)
    if not math.isfinite(fx):
        z, _ = f.domain_point(x)
        fx, x0 = f(z), z
    else:
        x0 = x
    if not math.isfinite(fx):
        raise InfeasibleError(f"{f.label} is +inf at every probed point")
    cuts_A, cuts_c = [], []

    def add_cut(y):
        g = f.subgradient(y)
        if g is None:
            raise SolverError(f"{f.label} has no subgradient oracle; cannot certify")
        cuts_A.append(g)
        cuts_c.append(f(y) - g @ y)

    add_cut(x0)
    best_y, best_P = x0, f(x0) + reg.value(x0)
    lower, u = -math.inf, None
    terms = 0.0
    for _ in range(min(budget, KELLEY_MAX_CUTS)):
        A, c = np.array(cuts_A), np.array(cuts_c)
        y = _solve_epigraph(A, c, reg, best_y, budget)
        P = f(y) + reg.value(y)
        if P < best_P:
            best_y, best_P = y, P
        D, u_new, terms_new = _maxaffine_dual(A, c, reg, -reg.grad(best_y))
        if D > lower:
            lower, u, terms = D, u_new, terms_new
        if best_P - lower <= tol * max(1.0, abs(best_P)):
            break
        add_cut(y)
    return best_y, lower, u, terms


def _prox(space, f, F, lam, x, tol, kind, budget=DEFAULT_BUDGET):
    if not tol > 0:
        raise InputError("tol must be positive")
    x = space.check(x).astype(float)
    reg = _reg(space, F, x, lam, kind)
    hilbert_quadratic = space.is_hilbert and F.kind == "power" and F.p == 2
    curv = reg.a / reg.b**2  # g(y) = curv ||x - y||^2 / 2 in that case

    terms = 0.0
    if f.kind == "zero":
        y, D, u = x.copy(), 0.0, np.zeros_like(x)
    elif f.kind == "indicator":
        y = _solve_projection(space, f.set, x, budget)
        D, u, terms = _certify(f, reg, y)
    elif f.kind == "quadratic":
        if hilbert_quadratic:
            y = np.linalg.solve(f.Q + curv * np.eye(len(x)), curv * x - f.b)
        else:
            y = _solve_smooth(f, reg, x, budget)
        D, u, terms = _certify(f, reg, y)
    elif f.kind == "l1":
        if hilbert_quadratic:
            t = f.weight / curv
            y = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
        else:
            y = _solve_l1(f, reg, x, budget)
        D, u, terms = _certify(f, reg, y)
        if not hilbert_quadratic:
            # the dual over the box is smooth; keep whichever pair certifies better
            u2, y2 = _l1_dual(f, reg, u, budget)
            D2, u2, terms2 = -f.conjugate(u2) - reg.conj_neg(u2)[0], u2, reg.conj_neg(u2)[1]
            if D2 > D:
                D, u, terms = D2, u2, terms + terms2
            if f(y2) + reg.value(y2) < f(y) + reg.value(y):
                y = y2
    elif f.kind == "max_affine":
        y = _solve_epigraph(f.A, f.c, reg, x, budget)
        D, u, terms = _maxaffine_dual(f.A, f.c, reg, -reg.grad(y))
    else:
        y, D, u, terms = _kelley(f, reg, x, tol, budget)

    fy = f(y)
    if not math.isfinite(fy):
        raise InfeasibleError(f"{f.label}: solver ended outside the domain", best=y)
    gy = float(reg.value(y))
    P = fy + gy
    if not (math.isfinite(P) and math.isfinite(D)):
        raise SolverError("objective or dual value overflows double precision", best=y, gap=math.inf)
    allowance = 16 * _EPS * (abs(fy) + abs(gy) + terms) + 1e-300
    gap = 0.0 if f.kind == "zero" else max(P - D, 0.0) + allowance
    # below one ulp of the objective an absolute gap is unattainable, so tol is
    # relative once |P| > 1; the distance bound below uses the actual gap
    if not gap <= tol * max(1.0, abs(P)):
        raise SolverError(f"certified gap {gap:.3g} exceeds tol {tol:.3g} (objective {P:.3g})", best=y, gap=gap)

    # every minimizer candidate lies where the dual minorant allows h <= P
    slope = space.dual_norm(u)
    if f.kind in ("max_affine", "generic"):
        # simplex weights give f >= <u, .> + <theta, c>, and <theta, c> = D + g*(-u)
        fc = -(D + reg.conj_neg(u)[0])
    else:
        fc = f.conjugate(u)
    level = P - float(u @ x) + fc
    t_max = reg.growth_radius(slope, max(level, 0.0))
    r_hat = space.norm(x - y)
    r0 = max(r_hat, t_max) * (1 + 1e-12) + 1e-300
    r0 = max(r0, 1e-12)
    glob = ball_modulus(space, F, r0 if kind == "young" else r0 / lam)
    d = certified_gap_to_distance(F, space.modulus, r0, lam, gap, kind, extra=glob)
    return ProxResult(
        minimizer=y,
        objective=P,
        gap=gap,
        distance_bound=d,
        dual=u,
        radius=r0,
        lam=lam,
        kind=kind,
        value_slack=gap + reg.lipschitz(r0) * d,
        info={"dual_value": D},
    )


def prox_young(space, f, F, lam, x, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET) -> ProxResult:
    """Minimize ``f(y) + Phi(||x - y||) / phi(lam)``."""
    return _prox(space, f, F, lam, x, tol, "young", budget)


def prox_pr(space, f, F, lam, x, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET) -> ProxResult:
    """Minimize ``f(y) + lam Phi(||x - y|| / lam)``."""
    return _prox(space, f, F, lam, x, tol, "pr", budget)


def moreau_envelope(space, f, F, lam, x, tol=DEFAULT_TOL) -> float:
    return prox_pr(space, f, F, lam, x, tol).objective


def project_certified(space, f: Indicator, x, tol=DEFAULT_TOL) -> ProxResult:
    """Metric projection as the prox of an indicator (any Young function gives the same point)."""
    return prox_young(space, f, YoungFunction.power(2), 1.0, x, tol)


@dataclass
class Sweep:
    entries: list
    distance_nondecreasing: bool
    value_nonincreasing: bool

    def __iter__(self):
        return iter(self.entries)


def lambda_sweep(space, f, F, x, lambdas, tol=DEFAULT_TOL, kind="young") -> Sweep:
    """Solve along a decreasing lambda grid and check the two monotonicity claims.

    ``||x - x_lam||`` must be nondecreasing and ``f(x_lam)`` nonincreasing in
    lambda, each up to twice the summed certificates of neighbouring solves.
    """
    lambdas = [float(v) for v in lambdas]
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise InputError("lambda grid must be strictly decreasing")
    solve = prox_young if kind == "young" else prox_pr
    entries = []
    for lam in lambdas:
        try:
            res = solve(space, f, F, lam, x, tol)
        except SolverError as exc:
            raise type(exc)(f"lambda={lam}: {exc}", best=exc.best, gap=exc.gap) from exc
        entries.append((lam, res, f(res.minimizer)))
    dist_ok = value_ok = True
    for (_, r1, v1), (_, r2, v2) in zip(entries, entries[1:]):
        # r1 has the larger lambda
        d1 = space.norm(x - r1.minimizer)
        d2 = space.norm(x - r2.minimizer)
        if d1 < d2 - 2 * (r1.distance_bound + r2.distance_bound):
            dist_ok = False
        if v1 > v2 + 2 * (r1.value_slack + r2.value_slack):
            value_ok = False
    return Sweep(entries, dist_ok, value_ok)
