"""Sampling harness: adversarial search for violations of every implemented inequality.

Each check returns a ``PropertyCheck`` whose ``min_margin`` is the smallest
slack-adjusted margin seen; the verdict is ``fail`` exactly when it is
negative.  Slack always comes from solver certificates (or a few ulps of
roundoff on the terms actually summed), never from a global tolerance.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import moduli
from .errors import ConfigError, InputError, SolverError
from .prox import (
    DEFAULT_TOL,
    ConvexFunction,
    L1Norm,
    MaxAffine,
    Quadratic,
    Zero,
    _reg,
    indicator,
    prox_pr,
    prox_young,
)
from .spaces import AffineSubspace, Ball, Box, Halfspace, NormedSpace, _lp, delta_X_inverse, duality_element
from .spaces import project, projection_continuity_bound
from .young import YoungFunction

_EPS = np.finfo(float).eps


# ------------------------------------------------------------ configuration


def parse_young(spec) -> YoungFunction:
    """``"power(4)"``, ``"exp"``, ``"cosh"`` or a table ``{kind, p}``."""
    if isinstance(spec, YoungFunction):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind")
        p = float(spec.get("p", 2.0))
    else:
        text = str(spec).strip()
        if text.startswith("power(") and text.endswith(")"):
            kind, p = "power", float(text[6:-1])
        else:
            kind, p = text, 0.0
    if kind == "power":
        return YoungFunction.power(p)
    if kind in ("exp", "cosh"):
        return YoungFunction(kind, 0.0)
    raise ConfigError(f"unknown Young variant {spec!r}", field="young")


def build_objective(spec: dict, space: NormedSpace) -> ConvexFunction:
    n = space.dimension
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return Zero()
    if kind == "quadratic":
        Q = np.asarray(spec.get("Q", np.eye(n)), dtype=float)
        return Quadratic(Q, spec.get("b"))
    if kind == "ball":
        return indicator(Ball(spec.get("center", [0.0] * n), float(spec.get("radius", 1.0)), float(spec.get("p", space.p))))
    if kind == "box":
        return indicator(Box(spec.get("lower", [-0.5] * n), spec.get("upper", [0.5] * n)))
    if kind == "halfspace":
        return indicator(Halfspace(spec.get("normal", [1.0] + [0.0] * (n - 1)), float(spec.get("offset", 0.0))))
    if kind == "affine":
        return indicator(AffineSubspace(spec["basis"], spec.get("point", [0.0] * n)))
    if kind == "l1":
        return L1Norm(float(spec.get("weight", 1.0)))
    if kind == "max_affine":
        return MaxAffine(spec["A"], spec["c"])
    raise ConfigError(f"unknown objective kind {kind!r}", field="objective.kind")


@dataclass
class CheckConfig:
    name: str
    check: str
    p: float = 2.0
    dimension: int = 2
    young: str = "power(2)"
    objective: dict = field(default_factory=lambda: {"kind": "zero"})
    center: list | None = None
    radius: float = 1.0
    lambdas: tuple = (1.0, 0.3, 0.1, 0.03, 0.01)
    eps: tuple = (0.25, 0.5, 1.0)
    samples: int = 1000
    seed: int = 0
    tol: float = DEFAULT_TOL
    prox: str = "young"
    formulas: tuple = ("compose", "power_norm", "psi", "renorm", "space", "scalar")

    def __post_init__(self):
        if self.check not in CHECKS:
            raise ConfigError(f"unknown check {self.check!r}; choose from {sorted(CHECKS)}", field="type")
        if int(self.samples) < 1:
            raise ConfigError("sample count must be at least 1", field="samples")
        if not self.lambdas or not self.eps:
            raise ConfigError("grids must be nonempty", field="lambdas/eps")
        lam = [float(v) for v in self.lambdas]
        if any(b >= a for a, b in zip(lam, lam[1:])) or not (0 < lam[-1] and lam[0] <= 1):
            raise ConfigError("lambda grid must be strictly decreasing inside (0, 1]", field="lambdas")
        eps = [float(v) for v in self.eps]
        if any(b <= a for a, b in zip(eps, eps[1:])) or eps[0] <= 0:
            raise ConfigError("eps grid must be strictly increasing and positive", field="eps")
        if self.prox not in ("young", "pr", "both"):
            raise ConfigError(f"prox must be young, pr or both, got {self.prox!r}", field="prox")
        if not self.radius > 0:
            raise ConfigError("radius must be positive", field="radius")
        self.lambdas, self.eps, self.samples = tuple(lam), tuple(eps), int(self.samples)
        try:
            self.F = parse_young(self.young)
            self.space = NormedSpace(int(self.dimension), float(self.p))
            self.f = build_objective(self.objective, self.space)
        except InputError as exc:
            raise ConfigError(str(exc), field="space/young/objective") from exc
        self.z = np.zeros(self.space.dimension) if self.center is None else np.asarray(self.center, dtype=float)
        if self.z.shape != (self.space.dimension,):
            raise ConfigError("center has the wrong dimension", field="center")

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "p": self.p,
            "dimension": self.dimension,
            "young": self.F.label,
            "objective": self.objective,
            "center": [float(v) for v in self.z],
            "radius": self.radius,
            "lambdas": list(self.lambdas),
            "eps": list(self.eps),
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "prox": self.prox,
        }


@dataclass
class PropertyCheck:
    name: str
    configuration: dict
    verdict: str
    min_margin: float
    witness: dict
    samples: int
    solver_failures: int = 0
    notes: list = field(default_factory=list)
    runtime: float = 0.0

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "configuration": self.configuration,
            "verdict": self.verdict,
            "min_margin": _num(self.min_margin),
            "samples": self.samples,
            "solver_failures": self.solver_failures,
            "witness": _clean(self.witness),
            "notes": list(self.notes),
        }


def _num(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class _Tracker:
    """Running minimum margin with its witness."""

    def __init__(self):
        self.min = math.inf
        self.witness = {}
        self.count = 0
        self.failures = 0
        self.notes = []

    def add(self, margins, make_witness):
        margins = np.atleast_1d(np.asarray(margins, dtype=float))
        self.count += margins.size
        if margins.size == 0:
            return
        i = int(np.argmin(margins))
        if margins[i] < self.min:
            self.min = float(margins[i])
            self.witness = make_witness(i)

    def result(self, cfg: CheckConfig, started: float) -> PropertyCheck:
        if self.failures:
            self.notes.append(f"{self.failures} solver failures")
        verdict = "pass" if (self.min >= 0 and self.failures == 0 and self.count > 0) else "fail"
        if self.count == 0:
            verdict = "pass"
            self.notes.append("vacuous: no admissible samples")
        return PropertyCheck(cfg.name, cfg.to_json(), verdict, self.min, self.witness, self.count,
                             self.failures, self.notes, time.perf_counter() - started)


# ----------------------------------------------------------------- sampling


def sample_directions(rng, space: NormedSpace, n: int) -> np.ndarray:
    g = rng.standard_normal((n, space.dimension))
    # a share of axis-aligned and diagonal directions: extremal for l_p
    k = n // 5
    if k:
        axes = np.zeros((k, space.dimension))
        axes[np.arange(k), rng.integers(0, space.dimension, k)] = rng.choice([-1.0, 1.0], k)
        g[:k] = axes
        g[k:2 * k] = rng.choice([-1.0, 1.0], (k, space.dimension))
    return g / _lp(g, space.p)[:, None]


def sample_ball(rng, space: NormedSpace, n: int, center, r: float) -> np.ndarray:
    """Uniform-ish points of ``B(center, r)`` with extra mass near the sphere and the center."""
    d = sample_directions(rng, space, n)
    u = rng.random(n)
    mode = rng.integers(0, 3, n)
    radii = np.where(
        mode == 0, r * u ** (1.0 / space.dimension),
        np.where(mode == 1, r * (1 - 10.0 ** (-6 * u)), r * u**3),
    )
    return np.asarray(center, float) + d * radii[:, None]


def sample_pairs(rng, space: NormedSpace, n: int, center, r: float, eps: float, max_sep: float | None = None):
    """Pairs in ``B(center, r)`` with ``eps <= ||x - y|| (<= max_sep)``.

    Mixes independent, near-coincident (separation just above eps), antipodal
    and collinear pairs; the last are extremal for midpoint gaps.
    """
    center = np.asarray(center, float)
    xs, ys = [], []
    have = 0
    for _ in range(200):
        m = max(2 * (n - have), 64)
        x = sample_ball(rng, space, m, center, r)
        kind = rng.integers(0, 4, m)
        d = sample_directions(rng, space, m)
        sep = eps * (1 + np.where(rng.random(m) < 0.5, 10.0 ** (-8 * rng.random(m)), rng.random(m)))
        if max_sep is not None:
            sep = np.minimum(sep, max_sep)
        y = x + d * sep[:, None]
        anti = center - (x - center) * (1 - 1e-3 * rng.random(m))[:, None]
        y = np.where((kind == 1)[:, None], anti, y)
        indep = sample_ball(rng, space, m, center, r)
        y = np.where((kind == 2)[:, None], indep, y)
        # collinear with the center, radii a and b
        a = r * rng.random(m)
        b = np.clip(a + np.where(rng.random(m) < 0.5, 1, -1) * sep, -r, r)
        dd = sample_directions(rng, space, m)
        col = kind == 3
        x = np.where(col[:, None], center + dd * a[:, None], x)
        y = np.where(col[:, None], center + dd * b[:, None], y)
        s = _lp(x - y, space.p)
        ok = (_lp(y - center, space.p) <= r) & (_lp(x - center, space.p) <= r) & (s >= eps)
        if max_sep is not None:
            ok &= s <= max_sep
        xs.append(x[ok])
        ys.append(y[ok])
        have += int(ok.sum())
        if have >= n:
            break
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


# ------------------------------------------------------------------ helpers


def _solver(kind):
    return prox_young if kind == "young" else prox_pr


def _kinds(cfg):
    return ("young", "pr") if cfg.prox == "both" else (cfg.prox,)


def _base_radius(cfg, kind="young"):
    """Certified ``R0 = ||z - prox_1(z)||`` upper bound."""
    res = _solver(kind)(cfg.space, cfg.f, cfg.F, 1.0, cfg.z, cfg.tol)
    return cfg.space.norm(cfg.z - res.minimizer) + res.distance_bound


def _solve(cfg, tr, kind, lam, x):
    try:
        return _solver(kind)(cfg.space, cfg.f, cfg.F, lam, x, cfg.tol)
    except SolverError as exc:
        tr.failures += 1
        if len(tr.notes) < 5:
            tr.notes.append(f"solver failure at lam={lam}: {exc}")
        return None


def _vec(v):
    return [float(t) for t in np.asarray(v).ravel()]


# ------------------------------------------------------------------- checks


def check_uniform_continuity(cfg: CheckConfig) -> PropertyCheck:
    """``||x - y|| < delta(eps)`` implies ``||prox(x) - prox(y)|| < eps`` with one delta for all lambda."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F = cfg.space, cfg.F
    R0 = _base_radius(cfg)
    R = moduli.prox_radius_bound(F, cfg.radius, max(R0, 1e-12))
    ball = moduli.ball_modulus(sp, F, R)
    tr.notes.append(f"R0 <= {R0!r}, R = {R!r}, ball modulus {ball.provenance}")
    per = max(1, math.ceil(cfg.samples / (len(cfg.eps) * len(cfg.lambdas))))
    for eps in cfg.eps:
        if eps > 2 * cfg.radius:
            tr.notes.append(f"eps={eps} exceeds the ball diameter: vacuous")
            continue
        delta = moduli.prox_uc_modulus(F, sp.modulus, R, eps, ball=ball)
        xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
        d = sample_directions(rng, sp, per)
        s = delta * (1 - np.where(rng.random(per) < 0.5, 10.0 ** (-10 * rng.random(per)), rng.random(per)))
        ys = xs + d * s[:, None]
        # keep y in the ball by pulling the pair inward along the radius
        over = _lp(ys - cfg.z, sp.p) > cfg.radius
        shift = np.where(over[:, None], (cfg.z - xs) * (delta / max(cfg.radius, 1e-300)), 0.0)
        xs, ys = xs + shift, ys + shift
        ok = (_lp(ys - cfg.z, sp.p) <= cfg.radius) & (_lp(xs - cfg.z, sp.p) <= cfg.radius) & (_lp(xs - ys, sp.p) < delta)
        for lam in cfg.lambdas:
            for x, y in zip(xs[ok], ys[ok]):
                rx, ry = _solve(cfg, tr, "young", lam, x), _solve(cfg, tr, "young", lam, y)
                if rx is None or ry is None:
                    continue
                dist = sp.norm(rx.minimizer - ry.minimizer)
                margin = eps + rx.distance_bound + ry.distance_bound - dist
                tr.add([margin], lambda i: {"x": _vec(x), "y": _vec(y), "lam": lam, "eps": eps, "delta": delta,
                                            "prox_distance": dist, "slack": rx.distance_bound + ry.distance_bound})
    return tr.result(cfg, t0)


def _ball_for(cfg, kind, r0, lam):
    return moduli.ball_modulus(cfg.space, cfg.F, r0 if kind == "young" else r0 / lam)


def check_variational_inequalities(cfg: CheckConfig) -> PropertyCheck:
    """``h(y) >= h(x_lam) + 2 delta_g(||y - x_lam||)`` for ``y`` in ``B(x, r0)``."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F, f = cfg.space, cfg.F, cfg.f
    n_y = 100
    per = max(1, math.ceil(cfg.samples / (n_y * len(cfg.lambdas) * len(_kinds(cfg)))))
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    tr.notes.append("r0 = 1.01 ||x - x_1|| + 0.01 with x_1 the lambda = 1 solve (certified upper bound)")
    for kind in _kinds(cfg):
        for x in xs:
            base = _solve(cfg, tr, kind, 1.0, x)
            if base is None:
                continue
            r0 = 1.01 * (sp.norm(x - base.minimizer) + base.distance_bound) + 0.01
            for lam in cfg.lambdas:
                res = base if lam == 1.0 else _solve(cfg, tr, kind, lam, x)
                if res is None:
                    continue
                reg = _reg(sp, F, x, lam, kind)
                ball = _ball_for(cfg, kind, r0, lam)
                ys = sample_ball(rng, sp, n_y, x, r0)
                if f.kind == "indicator":
                    half = n_y // 2
                    ys[:half] = np.array([project(sp, f.set, y) for y in ys[:half]])
                    ys = ys[_lp(ys - x, sp.p) <= r0]
                fy = f.evaluate_many(ys)
                keep = np.isfinite(fy)
                ys, fy = ys[keep], fy[keep]
                if len(ys) == 0:
                    continue
                hy = fy + reg.value_many(ys)
                sep = np.maximum(_lp(ys - res.minimizer, sp.p) - res.distance_bound, 0.0)
                if kind == "young":
                    gain = np.array([2.0 / F.density(lam) * ball(s) if s > 0 else 0.0 for s in sep])
                else:
                    gain = np.array([2.0 * lam * ball(s / lam) if s > 0 else 0.0 for s in sep])
                rhs = res.objective - res.gap + gain
                margin = hy - rhs + 8 * _EPS * (np.abs(hy) + abs(res.objective))
                tr.add(margin, lambda i: {"x": _vec(x), "y": _vec(ys[i]), "lam": lam, "prox": kind, "r0": r0,
                                          "h_y": hy[i], "rhs": rhs[i]})
    return tr.result(cfg, t0)


def check_convergence_to_projection(cfg: CheckConfig) -> PropertyCheck:
    """``lam < Lambda`` puts ``x_lam`` within eps of ``P_{cl dom f}(x)``; ``f(x_lam) -> f(x)`` on the domain."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F, f = cfg.space, cfg.F, cfg.f
    if f.kind not in ("indicator", "quadratic", "zero", "l1", "max_affine"):
        raise ConfigError("convergence check needs an objective with a domain point oracle", field="objective")
    per = max(1, math.ceil(cfg.samples / (2 * len(cfg.eps) + len(cfg.lambdas))))
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    zeta_pad = 1.0
    tr.notes.append(f"zeta = max(f(z) - f(x_1) lower bound, 0) + {zeta_pad}")
    for x in xs:
        if f.kind == "indicator":
            px = project(sp, f.set, x)
            pd = 0.0 if f.set.closed_form_projection(sp, x) is not None else _solve(cfg, tr, "young", 1.0, x).distance_bound
            fz = 0.0
        else:
            px, pd, fz = x.copy(), 0.0, f(x)
        base = _solve(cfg, tr, "young", 1.0, x)
        if base is None:
            continue
        beta = sp.norm(x - base.minimizer) + base.distance_bound
        alpha_low = f(base.minimizer) - base.value_slack
        zeta = max(fz - alpha_low, 0.0) + zeta_pad
        for eps in cfg.eps:
            Lam = moduli.lambda_threshold(F, sp.modulus, eps, beta, zeta)
            for lam in (Lam / 2, Lam / 10):
                res = _solve(cfg, tr, "young", lam, x)
                if res is None:
                    continue
                dist = sp.norm(res.minimizer - px)
                margin = eps + res.distance_bound + pd - dist
                tr.add([margin], lambda i: {"x": _vec(x), "eps": eps, "Lambda": Lam, "lam": lam, "distance": dist})
        # along a sweep from a domain point: f(x_lam) <= f(x) and the defect is
        # controlled by a subgradient at x times ||x - x_lam||
        xd = px
        fx = f(xd)
        g = f.subgradient(xd)
        for lam in cfg.lambdas:
            res = _solve(cfg, tr, "young", lam, xd)
            if res is None:
                continue
            fl = f(res.minimizer)
            upper = fx + res.value_slack - fl
            lower = fl - fx + sp.dual_norm(g) * (sp.norm(xd - res.minimizer) + res.distance_bound) + res.value_slack
            tr.add([min(upper, lower)], lambda i: {"x": _vec(xd), "lam": lam, "f_x": fx, "f_x_lam": fl})
    return tr.result(cfg, t0)


def check_hoelder(cfg: CheckConfig) -> PropertyCheck:
    """``||prox(x) - prox(y)|| <= max(2||x - y||, L ||x - y||^(1/p))`` on ``B(z, r)``."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F = cfg.space, cfg.F
    if F.kind != "power" or F.p != sp.p:
        raise ConfigError("the Hoelder check needs a power Young function matching the space exponent", field="young")
    R0 = _base_radius(cfg)
    if cfg.radius < max(1.0, R0):
        raise ConfigError(f"radius {cfg.radius} must be >= max(1, ||z - prox(z)||) = {max(1.0, R0)!r}; use a larger radius",
                          field="radius")
    A = sp.power_type_constant
    L = moduli.hoelder_constant(A, sp.p, cfg.radius)
    tr.notes.append(f"L = {L!r}")
    per = max(1, math.ceil(cfg.samples / len(cfg.lambdas)))
    near = per // 2
    x1, y1 = sample_pairs(rng, sp, per - near, cfg.z, cfg.radius, 1e-3)
    x2 = sample_ball(rng, sp, near, cfg.z, cfg.radius * 0.999)
    d = sample_directions(rng, sp, near) * (10.0 ** (-8 * rng.random(near)))[:, None] * 1e-3
    xs, ys = np.vstack([x1, x2]), np.vstack([y1, x2 + d])
    ok = _lp(ys - cfg.z, sp.p) <= cfg.radius
    for lam in cfg.lambdas:
        for x, y in zip(xs[ok], ys[ok]):
            rx, ry = _solve(cfg, tr, "young", lam, x), _solve(cfg, tr, "young", lam, y)
            if rx is None or ry is None:
                continue
            s = sp.norm(x - y)
            bound = max(2 * s, L * s ** (1.0 / sp.p))
            dist = sp.norm(rx.minimizer - ry.minimizer)
            margin = bound + rx.distance_bound + ry.distance_bound - dist
            tr.add([margin], lambda i: {"x": _vec(x), "y": _vec(y), "lam": lam, "bound": bound, "distance": dist})
    return tr.result(cfg, t0)


def check_nonexpansive(cfg: CheckConfig) -> PropertyCheck:
    """Hilbert + power(2): the prox is 1-Lipschitz up to the two distance bounds."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F = cfg.space, cfg.F
    if not (sp.is_hilbert and F.kind == "power" and F.p == 2):
        raise ConfigError("nonexpansiveness is a Hilbert space, power(2) statement", field="young")
    per = max(1, math.ceil(cfg.samples / len(cfg.lambdas)))
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    ys = np.where((rng.random(per) < 0.5)[:, None], sample_ball(rng, sp, per, cfg.z, cfg.radius),
                  xs + 1e-3 * sample_directions(rng, sp, per) * rng.random(per)[:, None])
    for lam in cfg.lambdas:
        for x, y in zip(xs, ys):
            rx, ry = _solve(cfg, tr, "young", lam, x), _solve(cfg, tr, "young", lam, y)
            if rx is None or ry is None:
                continue
            dist = sp.norm(rx.minimizer - ry.minimizer)
            s = sp.norm(x - y)
            margin = s + rx.distance_bound + ry.distance_bound - dist + 8 * _EPS * s
            tr.add([margin], lambda i: {"x": _vec(x), "y": _vec(y), "lam": lam, "distance": dist, "input_distance": s})
    return tr.result(cfg, t0)


def check_lambda_sweep(cfg: CheckConfig) -> PropertyCheck:
    """``||x - x_lam||`` nondecreasing and ``f(x_lam)`` nonincreasing in lambda."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, f = cfg.space, cfg.f
    per = max(1, math.ceil(cfg.samples / (2 * max(len(cfg.lambdas) - 1, 1) * len(_kinds(cfg)))))
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    for kind in _kinds(cfg):
        for x in xs:
            rows = []
            for lam in cfg.lambdas:
                res = _solve(cfg, tr, kind, lam, x)
                if res is None:
                    break
                rows.append((lam, res, sp.norm(x - res.minimizer), f(res.minimizer)))
            for (l1, r1, d1, v1), (l2, r2, d2, v2) in zip(rows, rows[1:]):
                m_dist = d1 - d2 + r1.distance_bound + r2.distance_bound
                m_val = v2 - v1 + r1.value_slack + r2.value_slack
                tr.add([m_dist, m_val], lambda i: {"x": _vec(x), "prox": kind, "lams": [l1, l2],
                                                   "distances": [d1, d2], "values": [v1, v2],
                                                   "claim": ["distance", "value"][i]})
    return tr.result(cfg, t0)


def check_subgradient_monotonicity(cfg: CheckConfig) -> PropertyCheck:
    """``<x* - y*, x - y> >= 2 gamma(eps)``, ``gamma = 2 delta_r`` for ``Phi o ||.||`` on ``B(0, r)``."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F = cfg.space, cfg.F
    ball = moduli.ball_modulus(sp, F, cfg.radius)
    per = max(1, math.ceil(cfg.samples / len(cfg.eps)))
    for eps in cfg.eps:
        if eps > 2 * cfg.radius:
            continue
        gamma = moduli.gamma_from_delta(ball(eps))
        xs, ys = sample_pairs(rng, sp, per, np.zeros(sp.dimension), cfg.radius, eps)
        xstar = np.array([duality_element(sp, F.density, x) if np.any(x) else np.zeros_like(x) for x in xs])
        ystar = np.array([duality_element(sp, F.density, y) if np.any(y) else np.zeros_like(y) for y in ys])
        terms = np.abs(xstar * (xs - ys)).sum(axis=1) + np.abs(ystar * (xs - ys)).sum(axis=1)
        lhs = np.einsum("ij,ij->i", xstar - ystar, xs - ys)
        margin = lhs - 2 * gamma + 8 * _EPS * terms
        tr.add(margin, lambda i: {"x": _vec(xs[i]), "y": _vec(ys[i]), "eps": eps, "lhs": lhs[i], "two_gamma": 2 * gamma})
    return tr.result(cfg, t0)


def check_duality_characterization(cfg: CheckConfig) -> PropertyCheck:
    """``u* = -grad g(x_lam)`` is a subgradient of f at ``x_lam``."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F, f = cfg.space, cfg.F, cfg.f
    n_v = 50
    per = max(1, math.ceil(cfg.samples / (n_v * len(cfg.lambdas) * len(_kinds(cfg)))))
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    for kind in _kinds(cfg):
        for x in xs:
            for lam in cfg.lambdas:
                res = _solve(cfg, tr, kind, lam, x)
                if res is None:
                    continue
                xh = res.minimizer
                u_star = -_reg(sp, F, x, lam, kind).grad(xh)
                vs = sample_ball(rng, sp, n_v, xh, cfg.radius)
                if f.kind == "indicator":
                    vs[: n_v // 2] = np.array([project(sp, f.set, v) for v in vs[: n_v // 2]])
                fv = f.evaluate_many(vs)
                keep = np.isfinite(fv)
                vs, fv = vs[keep], fv[keep]
                fx = f(xh)
                lin = (vs - xh) @ u_star
                slack = res.gap + sp.dual_norm(res.dual - u_star) * _lp(vs - xh, sp.p)
                margin = fv - fx - lin + slack + 8 * _EPS * (np.abs(fv) + abs(fx) + np.abs(lin))
                tr.add(margin, lambda i: {"x": _vec(x), "v": _vec(vs[i]), "lam": lam, "prox": kind})
    return tr.result(cfg, t0)


def check_radius_bound(cfg: CheckConfig) -> PropertyCheck:
    """``||y - prox_lam(y)|| <= R`` for ``y`` in ``B(z, r)`` and lambda in (0, 1]."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, F = cfg.space, cfg.F
    R0 = _base_radius(cfg)
    R = moduli.prox_radius_bound(F, cfg.radius, max(R0, 1e-12))
    tr.notes.append(f"R0 <= {R0!r}, R = {R!r}")
    per = max(1, math.ceil(cfg.samples / len(cfg.lambdas)))
    ys = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    for lam in cfg.lambdas:
        for y in ys:
            res = _solve(cfg, tr, "young", lam, y)
            if res is None:
                continue
            d = sp.norm(y - res.minimizer)
            tr.add([R - d + res.distance_bound], lambda i: {"y": _vec(y), "lam": lam, "distance": d, "R": R})
    return tr.result(cfg, t0)


def check_projection_continuity(cfg: CheckConfig) -> PropertyCheck:
    """``||P(x) - P(y)|| <= (R + r) delta_X^{-1}(2r/(R + r))`` for ``y`` in ``B(x, r)``, ``d_C(x) < R``."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    sp, f = cfg.space, cfg.f
    if f.kind != "indicator":
        raise ConfigError("projection continuity needs an indicator objective", field="objective")
    C = f.set
    per = max(1, math.ceil(cfg.samples / len(cfg.eps)))
    inv = lambda s: delta_X_inverse(sp, s)  # noqa: E731
    xs = sample_ball(rng, sp, per, cfg.z, cfg.radius)
    for r in cfg.eps:
        for x in xs:
            px = project(sp, C, x)
            R = sp.norm(x - px) + r * (1 + rng.random())
            y = x + sample_directions(rng, sp, 1)[0] * r * rng.random()
            py = project(sp, C, y)
            bound = projection_continuity_bound(R, r, inv)
            dist = sp.norm(px - py)
            margin = bound - dist + 8 * _EPS * (bound + dist)
            tr.add([margin], lambda i: {"x": _vec(x), "y": _vec(y), "r": r, "R": R, "bound": bound, "distance": dist})
    return tr.result(cfg, t0)


# -------------------------------------------------------- modulus inequalities


def _phi_gap(F, u, v, p):
    """Midpoint gap of ``Phi o ||.||`` on pairs (rows)."""
    nu, nv, nm = _lp(u, p), _lp(v, p), _lp(0.5 * (u + v), p)
    a, b, c = F.eval(nu), F.eval(nv), F.eval(nm)
    return 0.5 * a + 0.5 * b - c, np.abs(a) + np.abs(b) + np.abs(c)


def _modulus_compose(cfg, rng, n, tr):
    sp, F, r = cfg.space, cfg.F, cfg.radius
    mod = moduli.composed_modulus(sp.modulus, F, r)
    for eps in cfg.eps:
        if eps > 2 * r:
            continue
        u, v = sample_pairs(rng, sp, n, np.zeros(sp.dimension), r, eps)
        u, v = _adversarial(rng, sp, u, v, eps, r, lambda a, b: _phi_gap(F, a, b, sp.p)[0])
        gap, _ = _phi_gap(F, u, v, sp.p)
        d = mod(eps)
        tr.add(gap - d, lambda i: {"formula": "compose", "u": _vec(u[i]), "v": _vec(v[i]), "eps": eps, "gap": gap[i], "delta": d})


def _modulus_power_norm(cfg, rng, n, tr):
    sp = cfg.space
    A, p = sp.power_type_constant, sp.p
    mod = moduli.power_norm_modulus(A, p)
    G = YoungFunction.power(p)
    for eps in cfg.eps:
        u, v = sample_pairs(rng, sp, n, np.zeros(sp.dimension), 10.0, eps)
        u, v = _adversarial(rng, sp, u, v, eps, 10.0, lambda a, b: _phi_gap(G, a, b, p)[0])
        gap, _ = _phi_gap(G, u, v, p)
        d = mod(eps)
        tr.add(gap - d, lambda i: {"formula": "power_norm", "u": _vec(u[i]), "v": _vec(v[i]), "eps": eps, "gap": gap[i], "delta": d})


def _modulus_psi(cfg, rng, n, tr):
    sp, F = cfg.space, cfg.F
    mod = moduli.psi_composed_modulus(F, sp)
    if mod is None:
        tr.notes.append(f"psi: no global witness for {F.label} on l_{sp.p:g}, skipped")
        return
    stock_ok = moduli.stock_witness(F, sp, cfg.eps[0] / 8.0, validate=True)
    assert stock_ok is not None
    big = 10.0 if F.kind == "power" else 5.0
    for eps in cfg.eps:
        u, v = sample_pairs(rng, sp, n, np.zeros(sp.dimension), big, eps)
        u, v = _adversarial(rng, sp, u, v, eps, big, lambda a, b: _phi_gap(F, a, b, sp.p)[0])
        gap, _ = _phi_gap(F, u, v, sp.p)
        d = mod(eps)
        tr.add(gap - d, lambda i: {"formula": "psi", "u": _vec(u[i]), "v": _vec(v[i]), "eps": eps, "gap": gap[i], "delta": d})


def _modulus_space(cfg, rng, n, tr):
    sp = cfg.space
    for eps in cfg.eps:
        if eps > 2:
            continue
        u, v = sample_pairs(rng, sp, n, np.zeros(sp.dimension), 1.0, eps)
        gap = 1.0 - _lp(0.5 * (u + v), sp.p)
        d = sp.modulus(eps)
        tr.add(gap - d, lambda i: {"formula": "space", "u": _vec(u[i]), "v": _vec(v[i]), "eps": eps, "delta": d})


def _modulus_scalar(cfg, rng, n, tr):
    F, r = cfg.F, cfg.radius
    if F.kind == "power" and F.p < 3:
        tr.notes.append("scalar: the power-case closed form is not a midpoint modulus below p = 3; skipped here")
        return
    for eps in cfg.eps:
        e = min(eps, r)
        a = r * rng.random(n) * rng.random(n)
        b = np.minimum(a + e * (1 + rng.random(n) * 10.0 ** (-6 * rng.random(n))), r)
        ok = b - a >= e
        a, b = a[ok], b[ok]
        gap = F.midpoint_gap(a, b)
        d = F.delta_scalar(r, eps)
        tr.add(gap - d, lambda i: {"formula": "scalar", "a": a[i], "b": b[i], "eps": eps, "delta": d})


def _renorm_instance(sp: NormedSpace):
    """``f = ||x||^p / p + x_1^2/2 + sum x_i^4 / 4``: not radial, symmetric, ``f(0) = 0``."""
    p = sp.p

    def f(X):
        X = np.atleast_2d(X)
        return _lp(X, p) ** p / p + 0.5 * X[:, 0] ** 2 + 0.25 * np.sum(X**4, axis=1)

    def upper(s):  # sup of f over B(0, s)
        return s**p / p + 0.5 * s**2 + 0.25 * s**4

    def omega(t):
        lo, hi = 0.0, 1.0
        if upper(hi) < t:
            return 1.0 - 1e-9
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if upper(mid) < t:
                lo = mid
            else:
                hi = mid
        return min(lo * (1 - 1e-9), 1.0 - 1e-9)

    fmod = moduli.power_norm_modulus(sp.power_type_constant, p)
    return f, fmod, omega


def _modulus_renorm(cfg, rng, n, tr):
    sp = cfg.space
    f, fmod, omega = _renorm_instance(sp)
    M = 0.1
    ren = moduli.renorm(f, fmod, omega, M, sp)
    # sandwich ||x||/alpha <= |||x||| <= ||x||/beta
    xs = sample_ball(rng, sp, n, np.zeros(sp.dimension), 3.0)
    g = ren.gauge(xs)
    nx = _lp(xs, sp.p)
    lo = g - nx / ren.alpha
    hi = nx / ren.beta - g
    tr.add(np.minimum(lo, hi), lambda i: {"formula": "renorm_sandwich", "x": _vec(xs[i]), "gauge": g[i],
                                          "alpha": ren.alpha, "beta": ren.beta})
    # midpoint inequality in the new norm
    for eps in cfg.eps:
        if eps > 2:
            continue
        u = sample_ball(rng, sp, 3 * n, np.zeros(sp.dimension), 1.0)
        v = sample_ball(rng, sp, 3 * n, np.zeros(sp.dimension), 1.0)
        gu, gv = ren.gauge(u), ren.gauge(v)
        keep = (gu > 0) & (gv > 0)
        # push both onto the new unit sphere, where the inequality is tightest
        u = u[keep] / gu[keep, None]
        v = v[keep] / gv[keep, None]
        sep = ren.gauge(u - v)
        ok = sep >= eps
        u, v = u[ok][:n], v[ok][:n]
        gap = 1.0 - ren.gauge(0.5 * (u + v))
        d = ren.modulus(eps)
        tr.add(gap - d, lambda i: {"formula": "renorm_modulus", "u": _vec(u[i]), "v": _vec(v[i]), "eps": eps, "delta": d})


def _adversarial(rng, sp, u, v, eps, r, gapfun, rounds=3, keep=64):
    """Replace part of the batch by perturbations of its worst members."""
    if len(u) < 4 * keep:
        return u, v
    m = len(u) // (2 * rounds)
    U, V = [u], [v]
    cur_u, cur_v = u, v
    for k in range(rounds):
        g = gapfun(cur_u, cur_v)
        idx = np.argsort(g)[:keep]
        pick = rng.choice(idx, m)
        scale = 0.1 * 10.0 ** (-k)
        nu = cur_u[pick] + scale * r * rng.standard_normal((m, sp.dimension))
        nv = cur_v[pick] + scale * r * rng.standard_normal((m, sp.dimension))
        ok = (_lp(nu, sp.p) <= r) & (_lp(nv, sp.p) <= r) & (_lp(nu - nv, sp.p) >= eps)
        cur_u, cur_v = nu[ok], nv[ok]
        U.append(cur_u)
        V.append(cur_v)
        if len(cur_u) < keep:
            break
    u, v = np.vstack(U), np.vstack(V)
    return u[-len(U[0]):], v[-len(V[0]):]


_FORMULAS = {
    "compose": _modulus_compose,
    "power_norm": _modulus_power_norm,
    "psi": _modulus_psi,
    "renorm": _modulus_renorm,
    "space": _modulus_space,
    "scalar": _modulus_scalar,
}


def check_modulus_inequalities(cfg: CheckConfig) -> PropertyCheck:
    """Defining midpoint inequality of each closed-form modulus, zero slack."""
    t0 = time.perf_counter()
    tr = _Tracker()
    rng = np.random.default_rng(cfg.seed)
    unknown = set(cfg.formulas) - set(_FORMULAS)
    if unknown:
        raise ConfigError(f"unknown formulas {sorted(unknown)}", field="formulas")
    per = max(1, math.ceil(cfg.samples / len(cfg.eps)))
    for name in cfg.formulas:
        _FORMULAS[name](cfg, rng, per, tr)
    return tr.result(cfg, t0)


CHECKS = {
    "uniform_continuity": check_uniform_continuity,
    "variational_inequalities": check_variational_inequalities,
    "convergence_to_projection": check_convergence_to_projection,
    "modulus_inequalities": check_modulus_inequalities,
    "hoelder": check_hoelder,
    "nonexpansive": check_nonexpansive,
    "lambda_sweep": check_lambda_sweep,
    "subgradient_monotonicity": check_subgradient_monotonicity,
    "duality_characterization": check_duality_characterization,
    "radius_bound": check_radius_bound,
    "projection_continuity": check_projection_continuity,
}


def run_check(cfg: CheckConfig) -> PropertyCheck:
    return CHECKS[cfg.check](cfg)


# ------------------------------------------------------------------ reports


def write_report(check: PropertyCheck, path) -> None:
    """JSON report; the timing header sits alone on the first line so the rest is reproducible."""
    header = json.dumps({"runtime_seconds": round(check.runtime, 3), "written": time.strftime("%Y-%m-%dT%H:%M:%S")})
    body = json.dumps(check.to_json(), indent=2, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(header + "\n" + body + "\n")


def read_report(path) -> dict:
    with open(path) as fh:
        fh.readline()
        return json.loads(fh.read())


def write_margins(checks, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "type", "samples", "min_margin", "verdict", "solver_failures"])
        for c in checks:
            w.writerow([c.name, c.configuration["check"], c.samples, repr(float(c.min_margin)), c.verdict, c.solver_failures])
