"""Exit criteria: one test per criterion, each printing a PASS/FAIL line."""
import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import oracles
import ucprox
from ucprox import moduli
from ucprox.cli import main as cli_main
from ucprox.prox import prox_pr, prox_young
from ucprox.spaces import NormedSpace
from ucprox.verify import CheckConfig, build_objective, run_check
from ucprox.young import YoungFunction

pytestmark = pytest.mark.acceptance

DEFAULT = Path(ucprox.__file__).parent / "configs" / "default.toml"


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
        assert ok, detail

    return emit


def _run(**kw):
    kw.setdefault("name", kw["check"])
    return run_check(CheckConfig(**kw))


# ---------------------------------------------------------------- 1


def test_criterion_1_formula_fidelity(report):
    t0 = time.perf_counter()
    worst = 0.0

    def rel(got, want):
        nonlocal worst
        worst = max(worst, abs(got - want) / abs(want))

    P2 = YoungFunction.power(2)
    for e in (0.1, 0.5, 1.0, 1.7):
        rel(P2.delta_scalar(10.0, e), e * e / 4)
        rel(moduli.power_norm_modulus(1 / 8, 2.0)(e), e * e / 512)
        rel(moduli.power_compose_modulus(1 / 8, 1 / 4, 1.0, 2.0)(e), e * e / 512)
    rel(moduli.hoelder_constant(1 / 8, 2.0, 1.0), 16 * math.sqrt(40))
    for p, q in ((2.0, 2.0), (4.0, 4.0), (2.0, 4.0)):
        sp = NormedSpace(2, p)
        for eps, beta, zeta in ((0.5, 1.0, 1.0), (0.2, 3.0, 2.5), (1.0, 0.25, 10.0)):
            got = moduli.lambda_threshold(YoungFunction.power(q), sp.modulus, eps, beta, zeta)
            rel(got, float(oracles.lambda_threshold_power(p, q, eps, beta, zeta)))
    L2 = NormedSpace(2, 2.0)
    breve = Fraction(1, 98304)
    rel(moduli.compose_modulus(L2.modulus, P2, 1.0, 1.0), float((4 * breve / 3) ** 2 / 4))
    for r, e in ((2, 1), (1, Fraction(1, 4)), (5, 3)):
        rel(moduli.compose_modulus(L2.modulus, P2, float(r), float(e)), float(oracles.hilbert_power2_compose(e, r)))
    elapsed = time.perf_counter() - t0
    report(1, "formula fidelity", worst <= 1e-12 and elapsed < 1.0,
           f"max relative error {worst:.2e} (tol 1e-12), {elapsed:.3f}s (limit 1s)")


# ---------------------------------------------------------------- 2

SOUNDNESS_CONFIGS = [
    (p, d, formula, young)
    for p in (2.0, 4.0)
    for d in (2, 3)
    for formula, youngs in (
        ("compose", ("power", "exp", "cosh")),
        ("psi", ("power", "exp", "cosh")),
        ("power_norm", ("power",)),
        ("renorm", ("power",)),
    )
    for young in youngs
]


def test_criterion_2_modulus_soundness(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for p, d, formula, young in SOUNDNESS_CONFIGS:
        yname = f"power({p:g})" if young == "power" else young
        res = _run(check="modulus_inequalities", p=p, dimension=d, young=yname, formulas=(formula,),
                   eps=(0.05, 0.25, 1.0, 1.9), radius=1.5, samples=100000, seed=17)
        good = res.verdict == "pass" and res.samples >= 100000 and res.min_margin >= 0
        ok &= good
        lines.append(f"{formula}/{yname}/l{p:g}^{d}: n={res.samples} min_margin={res.min_margin:.2e}")
        if not good:
            lines.append(f"   witness {res.witness}")
    elapsed = time.perf_counter() - t0
    detail = f"{len(SOUNDNESS_CONFIGS)} configurations, {elapsed:.0f}s\n    " + "\n    ".join(lines)
    report(2, "modulus soundness (zero slack, >= 1e5 samples each)", ok, detail)


# ---------------------------------------------------------------- 3

ORACLE_OBJECTIVES = ("zero", "quadratic", "ball", "box", "l1")
ORACLE_YOUNGS = (("power", 2.0), ("power", 4.0), ("exp", 0.0))
INSTANCES = 50
GRID = 1e-3


def _random_spec(kind, rng):
    if kind == "quadratic":
        M = rng.normal(size=(2, 2)) * 0.8
        return {"kind": "quadratic", "Q": (M @ M.T).tolist(), "b": (rng.normal(size=2) * 0.3).tolist()}
    if kind == "ball":
        return {"kind": "ball", "center": rng.uniform(-0.3, 0.3, 2).tolist(), "radius": float(rng.uniform(0.2, 0.7))}
    if kind == "box":
        lo = rng.uniform(-0.6, 0.0, 2)
        return {"kind": "box", "lower": lo.tolist(), "upper": (lo + rng.uniform(0.1, 0.8, 2)).tolist()}
    if kind == "l1":
        return {"kind": "l1", "weight": float(rng.uniform(0.1, 1.5))}
    return {"kind": "zero"}


def test_criterion_3_solver_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    lines, ok = [], True
    for p in (2.0, 4.0):
        sp = NormedSpace(2, p)
        for kind_y, q in ORACLE_YOUNGS:
            F = YoungFunction(kind_y, q)
            for obj in ORACLE_OBJECTIVES:
                worst, count, fails = -math.inf, 0, 0
                for _ in range(INSTANCES):
                    spec = _random_spec(obj, rng)
                    f = build_objective(spec, sp)
                    x = rng.uniform(-1.0, 1.0, 2)
                    lam = float(rng.choice([1.0, 0.5, 0.2, 0.05, 0.01]))
                    for form, solve in (("young", prox_young), ("pr", prox_pr)):
                        res = solve(sp, f, F, lam, x)
                        ref = oracles.grid_prox(spec, (kind_y, q), lam, x, p, form, resolution=GRID)
                        excess = oracles.lp_norm(res.minimizer - ref, p) - (res.distance_bound + GRID)
                        worst = max(worst, excess)
                        count += 1
                        fails += excess > 0
                ok &= fails == 0
                lines.append(f"l{p:g} {F.label:8s} {obj:9s}: {count} solves, {fails} disagreements, "
                             f"worst excess {worst:.2e}")
    elapsed = time.perf_counter() - t0
    report(3, f"solver vs grid oracle ({INSTANCES} instances per cell, both prox maps)", ok,
           f"{elapsed:.0f}s\n    " + "\n    ".join(lines))


# ---------------------------------------------------------------- 4

THEOREM_RUNS = [
    ("nonexpansive", dict(check="nonexpansive", objective={"kind": "quadratic", "Q": [[2.0, 0.5], [0.5, 0.3]]},
                          lambdas=(1.0, 0.3, 0.1, 0.03, 0.01))),
    ("nonexpansive", dict(check="nonexpansive", objective={"kind": "box"}, lambdas=(1.0, 0.1))),
    ("uniform continuity", dict(check="uniform_continuity", objective={"kind": "quadratic"},
                                lambdas=(1.0, 0.3, 0.1, 0.03, 0.01), eps=(0.1, 0.5, 1.0))),
    ("uniform continuity", dict(check="uniform_continuity", p=4.0, young="power(4)", objective={"kind": "box"},
                                lambdas=(1.0, 0.3, 0.1, 0.03, 0.01), eps=(0.25, 1.0))),
    ("variational inequalities", dict(check="variational_inequalities", objective={"kind": "quadratic"}, prox="both")),
    ("variational inequalities", dict(check="variational_inequalities", p=4.0, young="power(4)",
                                      objective={"kind": "ball", "radius": 0.5}, prox="both")),
    ("variational inequalities", dict(check="variational_inequalities", young="exp", objective={"kind": "l1"},
                                      prox="both", lambdas=(1.0, 0.3, 0.1))),
    ("hoelder", dict(check="hoelder", objective={"kind": "quadratic"}, lambdas=(1.0, 0.3, 0.1, 0.03, 0.01))),
    ("hoelder", dict(check="hoelder", p=4.0, young="power(4)", objective={"kind": "box"}, lambdas=(1.0, 0.1))),
    ("sweep monotonicity", dict(check="lambda_sweep", objective={"kind": "quadratic", "Q": [[2.0, 0.5], [0.5, 0.3]],
                                                                 "b": [0.1, -0.2]}, lambdas=(1.0, 0.3, 0.1, 0.03, 0.01))),
    ("sweep monotonicity", dict(check="lambda_sweep", young="exp", objective={"kind": "l1"}, lambdas=(1.0, 0.3, 0.1),
                                prox="both")),
    ("subgradient monotonicity", dict(check="subgradient_monotonicity", eps=(0.1, 0.5, 1.0))),
    ("subgradient monotonicity", dict(check="subgradient_monotonicity", p=4.0, young="exp", dimension=3,
                                      eps=(0.1, 0.5, 1.0))),
]


BUDGET = {3: 11000, 5: 20000}  # index into THEOREM_RUNS


def test_criterion_4_theorem_properties(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for i, (label, kw) in enumerate(THEOREM_RUNS):
        # some sampled pairs are vacuous or leave the domain, so a few runs ask for more
        res = _run(samples=BUDGET.get(i, 10000), seed=5, **kw)
        enough = res.samples >= 10000
        good = res.verdict == "pass" and res.solver_failures == 0 and enough
        ok &= good
        lines.append(f"{label:25s} {kw.get('young', 'power(2)'):8s} l{kw.get('p', 2.0):g} {kw['objective']['kind'] if 'objective' in kw else '-':10s}"
                     f" n={res.samples} min_margin={res.min_margin:.2e} {res.verdict}")
        if not good:
            lines.append(f"   notes {res.notes[:3]} witness {res.witness}")
    per_property = {}
    for (label, _), line in zip(THEOREM_RUNS, [l for l in lines if not l.startswith("   ")]):
        per_property[label] = per_property.get(label, 0) + int(line.split("n=")[1].split()[0])
    ok &= all(v >= 10000 for v in per_property.values())
    elapsed = time.perf_counter() - t0
    report(4, "theorem-level properties with certified slack", ok,
           f"{elapsed:.0f}s, samples per property {per_property}\n    " + "\n    ".join(lines))


# ---------------------------------------------------------------- 5


def test_criterion_5_convergence_threshold(report):
    t0 = time.perf_counter()
    runs = [
        dict(objective={"kind": "ball", "radius": 1.0}, center=[2.0, 0.0], radius=0.5, eps=(0.5,)),
        dict(objective={"kind": "ball", "radius": 1.0}, center=[0.0, 0.0], radius=2.5, eps=(0.1, 0.5, 1.0)),
        dict(p=4.0, dimension=3, young="power(4)", objective={"kind": "box"}, radius=2.0, eps=(0.1, 0.5)),
        dict(p=4.0, young="exp", objective={"kind": "halfspace", "normal": [1.0, 2.0], "offset": 0.3}, radius=2.0,
             eps=(0.25, 1.0)),
        dict(young="cosh", objective={"kind": "affine", "basis": [[1.0, -1.0]], "point": [0.0, 0.5]}, radius=2.0,
             eps=(0.25, 1.0)),
    ]
    lines, ok = [], True
    for kw in runs:
        res = _run(check="convergence_to_projection", samples=300, seed=9, **kw)
        good = res.verdict == "pass" and res.solver_failures == 0 and res.samples > 0
        ok &= good
        lines.append(f"{kw.get('young', 'power(2)'):8s} l{kw.get('p', 2.0):g} {kw['objective']['kind']:9s} eps={kw['eps']}"
                     f" n={res.samples} min_margin={res.min_margin:.2e}")
        if not good:
            lines.append(f"   notes {res.notes[:3]} witness {res.witness}")
    elapsed = time.perf_counter() - t0
    report(5, "lambda < Lambda gives ||x_lam - P(x)|| < eps and f(x_lam) -> f(x)", ok,
           f"{elapsed:.0f}s\n    " + "\n    ".join(lines))


# ---------------------------------------------------------------- 6


def test_criterion_6_scaling_contrast(report, tmp_path):
    import csv

    assert cli_main(["tabulate", str(DEFAULT), "-o", str(tmp_path)]) == 0
    with open(tmp_path / "moduli.csv") as fh:
        rows = list(csv.DictReader(fh))
    groups = {}
    for r in rows:
        if r["formula"] in ("prox_uc_modulus", "prox_uc_modulus_alt"):
            groups.setdefault((r["formula"], r["p"], r["young"], r["R"], r["eps"]), {})[float(r["lambda"])] = r["delta"]
    const_ok = decr_ok = True
    n_const = n_decr = 0
    for key, vals in groups.items():
        if key[0] == "prox_uc_modulus":
            n_const += 1
            const_ok &= len(set(vals.values())) == 1
        else:
            n_decr += 1
            d = [float(vals[lam]) for lam in (1.0, 0.5, 0.1)]
            decr_ok &= d[0] > d[1] > d[2]
    eps_grid = sorted({float(k[4]) for k in groups})
    report(6, "scaling contrast in tabulate output", const_ok and decr_ok and n_const == n_decr > 0,
           f"{n_const} lambda-constant row groups (identical strings), {n_decr} strictly decreasing along "
           f"lambda = 1, 0.5, 0.1; eps grid {eps_grid}")


# ---------------------------------------------------------------- 7


def test_criterion_7_cli_contract(report, tmp_path):
    t0 = time.perf_counter()
    outs = []
    codes = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        proc = subprocess.run([sys.executable, "-m", "ucprox.cli", "run", str(DEFAULT), "-o", str(d)],
                              capture_output=True, text=True)
        codes.append(proc.returncode)
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    elapsed = time.perf_counter() - t0

    def strip(blob, name):
        # the timing header is the first line of each JSON report
        return blob.split(b"\n", 1)[1] if name.endswith(".json") else blob

    same = outs[0].keys() == outs[1].keys() and all(strip(outs[0][n], n) == strip(outs[1][n], n) for n in outs[0])
    n_reports = sum(n.endswith(".json") for n in outs[0])
    report(7, "CLI smoke config", codes == [0, 0] and same and n_reports == 12 and elapsed < 60,
           f"exit codes {codes}, {n_reports} reports, byte-identical bodies: {same}, {elapsed:.1f}s for two runs")
