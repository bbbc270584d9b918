"""Closed-form moduli: composition, power-type calculus, prox continuity, renorming."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError
from .modulus import Modulus
from .spaces import NormedSpace
from .young import YoungFunction

__all__ = [
    "Modulus",
    "WitnessPair",
    "PsiFunction",
    "gamma_from_delta",
    "delta_from_gamma",
    "compose_modulus",
    "composed_modulus",
    "power_compose_modulus",
    "power_norm_modulus",
    "psi_compose_modulus",
    "psi_composed_modulus",
    "stock_psi",
    "stock_witness",
    "ball_modulus",
    "prox_radius_bound",
    "prox_uc_modulus",
    "prox_uc_modulus_alt",
    "lambda_threshold",
    "hoelder_constant",
    "hoelder_modulus",
    "renorm",
    "Renorming",
]


def _positive(name, value):
    if not value > 0:
        raise InputError(f"{name} must be positive, got {value!r}")


def gamma_from_delta(delta: float) -> float:
    _positive("delta", delta)
    return 2.0 * delta


def delta_from_gamma(gamma: float) -> float:
    _positive("gamma", gamma)
    return gamma / 4.0


# ------------------------------------------------------------ composition


def compose_modulus(space_modulus: Modulus, F: YoungFunction, r: float, eps: float) -> float:
    """Modulus of ``Phi o ||.||`` on ``B(0, r)`` built from the space modulus and Phi's witnesses."""
    _positive("r", r)
    _positive("eps", eps)
    e = min(eps, 2.0 * r)
    breve = F.xi(r, 0.25 * e * space_modulus(e / (2.0 * r))) / 3.0
    tilde = min(0.5 * e, F.omega(1.5 * r, 2.0 * breve))
    value = min(F.delta_scalar(r, tilde), breve)
    if not value > 0:
        raise InputError(f"composition modulus underflowed at r={r}, eps={eps}")
    return value


def composed_modulus(space_modulus: Modulus, F: YoungFunction, r: float) -> Modulus:
    _positive("r", r)
    return Modulus(
        lambda e: compose_modulus(space_modulus, F, r, e),
        "compose_modulus",
        {"young": F.label, "r": r, "space": space_modulus.provenance},
        (0.0, 2.0 * r),
    )


def power_compose_modulus(A: float, B: float, K: float, p: float) -> Modulus:
    if not 0 < A < 0.5:
        raise InputError(f"A must lie in (0, 1/2), got {A!r}")
    _positive("B", B)
    _positive("K", K)
    if not p >= 2:
        raise InputError(f"p must be >= 2, got {p!r}")
    coeff = min(B / 2.0**p, A * K / 8.0**p)
    return Modulus(
        lambda e: coeff * e**p,
        "power_compose_modulus",
        {"A": A, "B": B, "K": K, "p": p, "coefficient": coeff},
    )


def power_norm_modulus(A: float, p: float) -> Modulus:
    """Global modulus ``(A / 8^p) eps^p`` of ``x -> ||x||^p / p``."""
    if not 0 < A < 0.5:
        raise InputError(f"A must lie in (0, 1/2), got {A!r}")
    if not p >= 2:
        raise InputError(f"p must be >= 2, got {p!r}")
    coeff = A / 8.0**p
    return Modulus(lambda e: coeff * e**p, "power_norm_modulus", {"A": A, "p": p, "coefficient": coeff})


# ---------------------------------------------------- Psi o ||.|| globally


@dataclass(frozen=True)
class WitnessPair:
    K_eps: float
    xi_eps: float

    def __post_init__(self):
        if not (self.K_eps >= 0 and self.xi_eps > 0):
            raise InputError("witness needs K_eps >= 0 and xi_eps > 0")

    def validate(self, psi: "PsiFunction", space_modulus: Modulus, eps: float, points: int = 400) -> None:
        """Check ``Psi'(t) delta_X(eps/t) t >= xi`` on a log grid above ``max(K, eps/2)``."""
        t0 = max(self.K_eps, eps / 2.0)
        ts = t0 * np.logspace(1e-9, math.log10(1e6 * max(self.K_eps, 1.0) / t0) + 1e-9, points)
        for t in ts:
            with np.errstate(over="ignore"):
                lhs = psi.derivative(t) * space_modulus(eps / t) * t
            if lhs < self.xi_eps:
                raise InputError(f"witness fails at t={t:.6g}: {lhs:.6g} < {self.xi_eps:.6g}")


@dataclass(frozen=True)
class PsiFunction:
    value: Callable[[float], float]
    derivative: Callable[[float], float]
    modulus: Modulus
    label: str = "psi"


def stock_psi(F: YoungFunction) -> PsiFunction:
    """``Psi = Phi`` with a global scalar modulus of ``t -> Psi(|t|)``.

    Power variants use Clarkson's scalar inequality
    ``|(a+b)/2|^q + |(a-b)/2|^q <= (|a|^q + |b|^q)/2``, giving ``(eps/2)^q / q``.
    For exp and cosh, ``Psi(|t|) - (cosh t - 1)`` is convex and the cosh gap is
    ``cosh(m)(cosh(eps/2) - 1)``, hence ``cosh(eps/2) - 1``.
    """
    if F.kind == "power":
        q = F.p
        mod = Modulus(lambda e: (e / 2.0) ** q / q, "clarkson_scalar", {"q": q})
    else:
        mod = Modulus(lambda e: math.cosh(e / 2.0) - 1.0, "cosh_half_minus_one", {"young": F.kind})
    return PsiFunction(F.eval, F.density, mod, F.label)


def stock_witness(F: YoungFunction, space: NormedSpace, eps: float, validate: bool = True) -> WitnessPair | None:
    """Hand-derived ``(K_eps, xi_eps)`` for ``Psi = Phi`` on ``space``, or None if none exists.

    With ``delta_X(s) >= A s^p`` on ``(0, 2]`` every ``t >= eps/2`` gives
    ``Psi'(t) delta_X(eps/t) t >= A eps^p Psi'(t) / t^(p-1)``, so ``K = 0`` and
    ``xi = A eps^p c`` with ``c`` a lower bound of ``Psi'(t) / t^(p-1)``.
    """
    _positive("eps", eps)
    p = space.p
    A = space.power_type_constant
    if F.kind == "power":
        if F.p < p:
            return None  # Psi' t^(1-p) -> 0 at infinity, no global modulus
        c = (eps / 2.0) ** (F.p - p)
    elif F.kind == "exp":
        # e^t - 1 >= t^k / k! for every integer k >= 1
        c = 1.0 / math.factorial(math.ceil(p - 1.0))
    else:
        # sinh t >= t^k / k! for odd k
        k = math.ceil(p - 1.0)
        if k % 2 == 0:
            k += 1
        c = 1.0 / math.factorial(k)
    # shaved so that rounding cannot flip the exact Hilbert equality
    w = WitnessPair(0.0, A * eps**p * c * (1 - 1e-9))
    if validate:
        w.validate(stock_psi(F), space.modulus, eps)
    return w


def psi_compose_modulus(Psi: PsiFunction, space_modulus: Modulus, witness: WitnessPair, eps: float) -> float:
    """Three-way minimum; ``witness`` must be the pair for ``eps / 8``."""
    _positive("eps", eps)
    if witness is None:
        raise InputError("psi_compose_modulus needs a WitnessPair for eps/8; build one with stock_witness")
    if space_modulus(1.0) > 0.5:
        raise InputError("space modulus must be clamped to <= 1/2 on (0, 1]")
    radius = max(eps / 2.0, 8.0 * witness.K_eps)
    middle = 0.25 * eps * space_modulus(eps / radius) * Psi.derivative(0.25 * eps)
    return min(Psi.modulus(eps / 2.0), middle, witness.xi_eps)


def psi_composed_modulus(F: YoungFunction, space: NormedSpace) -> Modulus | None:
    """Global modulus of ``Phi o ||.||`` on the whole space, when a stock witness exists."""
    if stock_witness(F, space, 1.0, validate=False) is None:
        return None
    psi = stock_psi(F)
    smod = space.modulus
    return Modulus(
        lambda e: psi_compose_modulus(psi, smod, stock_witness(F, space, e / 8.0, validate=False), e),
        "psi_compose_modulus",
        {"young": F.label, "p": space.p},
    )


def ball_modulus(space: NormedSpace, F: YoungFunction, r: float, which: str = "best") -> Modulus:
    """Modulus of ``Phi o ||.||`` on ``B(0, r)``.

    ``"compose"`` is the composition formula alone; ``"best"`` takes the
    pointwise maximum with the global formula whenever one exists.
    """
    comp = composed_modulus(space.modulus, F, r)
    if which == "compose":
        return comp
    if which != "best":
        raise InputError(f"unknown ball modulus {which!r}")
    glob = psi_composed_modulus(F, space)
    if glob is None:
        return comp

    def best(e):
        try:
            c = comp(e)
        except InputError:
            c = 0.0  # compose underflows on microscopic balls; the global term is positive
        return max(c, glob(e))

    return Modulus(best, f"max({comp.provenance}, {glob.provenance})", {"young": F.label, "r": r, "p": space.p},
                   (0.0, 2.0 * r))


# -------------------------------------------------------------- prox moduli


def prox_radius_bound(F: YoungFunction, r: float, R0: float) -> float:
    """Bound on ``||y - prox_lam(y)||`` over ``y in B(x, r)``, ``lam in (0, 1]``; ``R0 = ||x - prox_1(x)||``."""
    _positive("r", r)
    if not R0 >= 0:
        raise InputError("R0 must be nonnegative")
    phi0 = F.density(R0)
    arg = phi0 + (r + R0) * phi0 + F.eval(r + R0)
    return max(1.0, F.rho(arg))


def prox_uc_modulus(F: YoungFunction, space_modulus: Modulus, R: float, eps: float, ball: Modulus | None = None) -> float:
    """``min(eps/2, 2 delta_R(eps/2) / phi(R))``; the prox parameter never enters."""
    _positive("R", R)
    _positive("eps", eps)
    if ball is None:
        ball = composed_modulus(space_modulus, F, R)
    return min(0.5 * eps, 2.0 * ball(0.5 * eps) / F.density(R))


def prox_uc_modulus_alt(
    F: YoungFunction, space_modulus: Modulus, R: float, lam: float, eps: float, ball: Modulus | None = None
) -> float:
    """Counterpart for ``lam Phi(||x - y|| / lam)``: needs the modulus on ``B(0, R/lam)``."""
    _positive("R", R)
    _positive("eps", eps)
    if not 0 < lam <= 1:
        raise InputError(f"lam must lie in (0, 1], got {lam!r}")
    big = R / lam
    mod = composed_modulus(space_modulus, F, big) if ball is None else ball
    return min(0.5 * eps, 2.0 * lam * mod(eps / (2.0 * lam)) / F.density(big))


def lambda_threshold(F: YoungFunction, space_modulus: Modulus, eps: float, beta: float, zeta: float) -> float:
    """Prox parameters below the returned value put ``x_lam`` within ``eps`` of ``P_{cl dom f}(x)``.

    ``beta`` is ``||x - x_1||`` and ``zeta > f(z) - f(x_1)`` for a domain point
    ``z`` near the projection.
    """
    _positive("eps", eps)
    _positive("zeta", zeta)
    if not beta >= 0:
        raise InputError("beta must be nonnegative")
    ratio = eps / beta if beta > 0 else math.inf
    tilde = eps / 10.0 * space_modulus(ratio)
    return min(1.0, 0.5 * F.eta(0.5 * tilde * F.density(eps / 5.0) / zeta))


def hoelder_constant(A: float, p: float, r: float) -> float:
    if not 0 < A < 0.5:
        raise InputError(f"A must lie in (0, 1/2), got {A!r}")
    if not p >= 2:
        raise InputError(f"p must be >= 2, got {p!r}")
    _positive("r", r)
    return 16.0 * r * ((3.0 * p + 2.0**p) / (2.0 * A)) ** (1.0 / p)


def hoelder_modulus(A: float, p: float, R: float) -> Modulus:
    """Prox continuity modulus for ``Phi = t^p/p`` and a power-type norm."""
    _positive("R", R)
    coeff = 2.0 * A / (16.0**p * R ** (p - 1.0))
    return Modulus(lambda e: min(0.5 * e, coeff * e**p), "hoelder_modulus", {"A": A, "p": p, "R": R})


# ---------------------------------------------------------------- renorming


@dataclass
class Renorming:
    gauge: Callable
    modulus: Modulus
    alpha: float
    beta: float
    M: float
    notes: list = field(default_factory=list)


def renorm(
    f: Callable,
    f_modulus: Modulus,
    omega_f0: Callable[[float], float],
    M: float,
    space: NormedSpace,
    symmetry_samples: int = 256,
    seed: int = 0,
) -> Renorming:
    """Equivalent uniformly convex norm from a uniformly convex function on the unit ball.

    ``f`` maps an ``(N, n)`` array to ``N`` values.  The returned gauge takes a
    vector or a stack of vectors.
    """
    _positive("M", M)
    wm = omega_f0(M)
    if not wm < 1:
        raise InputError(f"need omega_f0(M) < 1, got {wm!r} at M={M!r}")
    notes = []
    zero = np.zeros((1, space.dimension))
    f0 = float(f(zero)[0])
    rng = np.random.default_rng(seed)
    probe = rng.uniform(-1, 1, size=(symmetry_samples, space.dimension))
    probe /= np.maximum(space.norm(probe), 1.0)[:, None]
    fx, fmx = f(probe), f(-probe)
    symmetric = np.allclose(fx, fmx, rtol=1e-12, atol=1e-14)
    if symmetric and f0 == 0:
        g = f
    else:
        notes.append("f replaced by x -> (f(x) + f(-x))/2 - f(0)")
        g = lambda x: 0.5 * (f(x) + f(-x)) - f0  # noqa: E731

    alpha = 0.5 * wm
    level = f_modulus(alpha)
    beta = omega_f0(level)

    def inside(pts):
        return (space.norm(pts) <= 1.0) & (g(pts) <= level)

    def gauge(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        nx = space.norm(pts)
        out = np.zeros(len(pts))
        nz = nx > 0
        if np.any(nz):
            v = pts[nz]
            lo = nx[nz] / alpha * (1 - 1e-12)
            hi = nx[nz] / beta * (1 + 1e-12)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                ok = inside(v / mid[:, None])
                hi = np.where(ok, mid, hi)
                lo = np.where(ok, lo, mid)
                if np.all(hi - lo <= 1e-14 * hi):
                    break
            out[nz] = 0.5 * (lo + hi)
        return float(out[0]) if single else out

    coeff = wm / (4.0 * M * alpha)
    mod = Modulus(
        lambda e: coeff * f_modulus(beta * min(e, 2.0)),
        "renorm_modulus",
        {"M": M, "alpha": alpha, "beta": beta},
        (0.0, 2.0),
    )
    return Renorming(gauge, mod, alpha, beta, M, notes)
