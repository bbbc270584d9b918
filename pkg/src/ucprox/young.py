"""Stock Young functions and the witnesses attached to them.

Every witness is post-verified against its defining inequality and nudged by
one ulp at a time if rounding broke it, so callers can rely on the stated
inequality holding exactly in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

KINDS = ("power", "exp", "cosh")
SCALAR_GRID_DIVISIONS = 64
SCALAR_SAFETY = 0.5
SCALAR_MAX_POINTS = 4096


def _exp_phi(t):
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t)
    out = np.expm1(flat) - flat
    small = flat < 0.1
    if np.any(small):
        # series avoids the cancellation in expm1(t) - t
        ts = flat[small]
        term = ts * ts / 2.0
        acc = term.copy()
        for k in range(3, 14):
            term = term * ts / k
            acc += term
        out[small] = acc
    return out.reshape(t.shape)


@dataclass(frozen=True)
class YoungFunction:
    """``power``: t^p/p, ``exp``: e^t - t - 1, ``cosh``: cosh t - 1."""

    kind: str = "power"
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown Young variant {self.kind!r}; expected one of {KINDS}")
        if self.kind == "power" and not self.p >= 2:
            raise InputError(f"power Young function needs p >= 2, got {self.p!r}")

    @classmethod
    def power(cls, p: float) -> "YoungFunction":
        return cls("power", float(p))

    @classmethod
    def exp(cls) -> "YoungFunction":
        return cls("exp", 0.0)

    @classmethod
    def cosh(cls) -> "YoungFunction":
        return cls("cosh", 0.0)

    @property
    def label(self) -> str:
        return f"power({self.p:g})" if self.kind == "power" else self.kind

    def to_json(self) -> dict:
        return {"kind": self.kind, "p": self.p} if self.kind == "power" else {"kind": self.kind}

    # -- evaluation ---------------------------------------------------------

    def _nonneg(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise InputError("Young functions are evaluated at t >= 0")
        return t

    def _scalar_eval(self, t: float) -> float:
        if self.kind == "power":
            return t**self.p / self.p
        if self.kind == "exp":
            return float(_exp_phi(t)) if t < 0.1 else math.expm1(t) - t
        s = math.sinh(t / 2.0)
        return 2.0 * s * s

    def eval(self, t):
        if type(t) is float and t >= 0:
            try:
                return self._scalar_eval(t)
            except OverflowError:
                return math.inf
        t = self._nonneg(t)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                out = t**self.p / self.p
            elif self.kind == "exp":
                out = _exp_phi(t)
            else:
                s = np.sinh(t / 2.0)
                out = 2.0 * s * s
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def density(self, t):
        if type(t) is float and t >= 0:
            try:
                if self.kind == "power":
                    return t ** (self.p - 1.0)
                return math.expm1(t) if self.kind == "exp" else math.sinh(t)
            except OverflowError:
                return math.inf
        t = self._nonneg(t)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                out = t ** (self.p - 1.0)
            elif self.kind == "exp":
                out = np.expm1(t)
            else:
                out = np.sinh(t)
        return float(out) if out.ndim == 0 else out

    def density_inverse(self, s: float) -> float:
        if s < 0:
            raise InputError("density inverse needs s >= 0")
        if self.kind == "power":
            return s ** (1.0 / (self.p - 1.0))
        if self.kind == "exp":
            return math.log1p(s)
        return math.asinh(s)

    def eval_inverse(self, v: float) -> float:
        """Largest ``t`` with ``Phi(t) <= v`` (up to one bisection step)."""
        if v < 0:
            raise InputError("eval_inverse needs v >= 0")
        if v == 0:
            return 0.0
        if self.kind == "power":
            t = (self.p * v) ** (1.0 / self.p)
        elif self.kind == "cosh":
            t = 2.0 * math.asinh(math.sqrt(v / 2.0))
        else:
            lo, hi = 0.0, 1.0
            while self.eval(hi) <= v:
                hi *= 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if self.eval(mid) <= v:
                    lo = mid
                else:
                    hi = mid
            return hi
        while self.eval(t) > v:
            t = math.nextafter(t, 0.0)
        return t

    def conjugate(self, s):
        """Fenchel conjugate on ``s >= 0`` via ``Phi*(phi(t)) = t phi(t) - Phi(t)``."""
        s = np.asarray(s, dtype=float)
        if self.kind == "power":
            q = self.p / (self.p - 1.0)
            out = s**q / q
        else:
            t = np.log1p(s) if self.kind == "exp" else np.arcsinh(s)
            out = s * t - self.eval(t)
        return float(out) if out.ndim == 0 else out

    # -- witnesses ------------------------------------------------------------

    def _ratio(self, s: float) -> float:
        return self.eval(s) / s

    def eta(self, t: float) -> float:
        """``s > 0`` with ``Phi(s)/s <= t``."""
        if not t > 0:
            raise InputError(f"eta needs t > 0, got {t!r}")
        if self.kind == "power":
            s = min(1.0, (self.p * t) ** (1.0 / (self.p - 1.0)))
            while self._ratio(s) > t:
                s = math.nextafter(s, 0.0)
            return s
        lo, hi = 1.0, 1.0
        while self._ratio(lo) > t:
            lo /= 2.0
        while self._ratio(hi) <= t:
            hi *= 2.0
        assert lo < hi, "eta bracket failure"
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._ratio(mid) <= t:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        assert self.density(lo / 2.0) <= 2.0 * t
        return lo

    def rho(self, t: float) -> float:
        """``s > 0`` with ``Phi(s)/s >= t``."""
        if not t > 0:
            raise InputError(f"rho needs t > 0, got {t!r}")
        if self.kind == "power":
            s = max(1.0, (self.p * t) ** (1.0 / (self.p - 1.0)))
            while self._ratio(s) < t:
                s = math.nextafter(s, math.inf)
            return s
        hi = 1.0
        while self._ratio(hi) < t:
            hi *= 2.0
        lo = hi / 2.0
        if self._ratio(lo) >= t:
            return lo
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._ratio(mid) >= t:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * hi:
                break
        return hi

    def xi(self, r: float, eps: float) -> float:
        """Growth gap ``Phi(eps)``: ``Phi(b) - Phi(a) >= Phi(eps)`` whenever ``b >= a + eps``."""
        if not (r > 0 and eps > 0):
            raise InputError("xi needs r > 0 and eps > 0")
        return self.eval(eps)

    def omega(self, r: float, eps: float) -> float:
        """``eps / phi(r)``: Phi is ``phi(r)``-Lipschitz on ``[0, r]``."""
        if not (r > 0 and eps > 0):
            raise InputError("omega needs r > 0 and eps > 0")
        lip = self.density(r)
        if not lip > 0:
            raise RuntimeError(f"density vanished at r={r}")
        return eps / lip

    def midpoint_gap(self, a, b):
        """``(Phi(a) + Phi(b))/2 - Phi((a + b)/2)``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = self._gap(0.5 * (a + b), 0.5 * np.abs(b - a))
        return float(out) if out.ndim == 0 else out

    def _gap(self, m, h):
        # midpoint m, half-separation h; product forms avoid cancellation
        if self.kind == "exp":
            return np.exp(m) * 2.0 * np.sinh(h / 2.0) ** 2
        if self.kind == "cosh":
            return np.cosh(m) * 2.0 * np.sinh(h / 2.0) ** 2
        return 0.5 * self.eval(m - h) + 0.5 * self.eval(m + h) - self.eval(m)

    def delta_scalar(self, r: float, eps: float) -> float:
        """Modulus of uniform convexity of Phi on ``[0, r]``."""
        if not (r > 0 and eps > 0):
            raise InputError("delta_scalar needs r > 0 and eps > 0")
        if self.kind == "power":
            p = self.p
            e = min(eps, 2.0 * r)
            return e**p / (p * p * 2.0 ** ((p * p - 2.0 * p) / (p - 1.0)))
        # no pair in [0, r] is farther apart than r
        e = min(eps, r)
        # phi'' is nondecreasing for exp and cosh, so the gap below is
        # nondecreasing in alpha; coarsening on long intervals loses nothing
        h = max(e / SCALAR_GRID_DIVISIONS, (r - e) / SCALAR_MAX_POINTS)
        n = max(int(math.floor((r - e) / h)), 0)
        alpha = np.minimum(np.arange(n + 1) * h, r - e)
        if alpha[-1] < r - e:
            alpha = np.append(alpha, r - e)
        # for fixed alpha the gap grows with beta, so beta = alpha + e is the worst case
        gap = self._gap(alpha + 0.5 * e, np.full_like(alpha, 0.5 * e))
        value = SCALAR_SAFETY * float(np.min(gap))
        if not value > 0:
            raise InputError(f"degenerate scalar modulus grid at r={r}, eps={eps}")
        return value
