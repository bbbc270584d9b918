import math
from fractions import Fraction

import numpy as np
import pytest

import oracles
from ucprox import moduli
from ucprox.errors import InputError
from ucprox.modulus import Modulus
from ucprox.spaces import NormedSpace
from ucprox.young import YoungFunction

L2 = NormedSpace(2, 2.0)
L4 = NormedSpace(3, 4.0)
P2 = YoungFunction.power(2)
P4 = YoungFunction.power(4)
EXP = YoungFunction.exp()
COSH = YoungFunction.cosh()


def test_gamma_delta_conversions():
    assert moduli.gamma_from_delta(1 / 8) == 1 / 4
    assert moduli.delta_from_gamma(1.0) == 1 / 4
    assert moduli.delta_from_gamma(moduli.gamma_from_delta(0.3)) == pytest.approx(0.15)
    with pytest.raises(InputError):
        moduli.gamma_from_delta(0.0)
    with pytest.raises(InputError):
        moduli.delta_from_gamma(-1.0)


def test_compose_nested_example_exact():
    breve = Fraction(1, 98304)
    tilde = 4 * breve / 3
    expected = tilde**2 / 4
    assert oracles.hilbert_power2_compose(1, 1) == expected
    got = moduli.compose_modulus(L2.modulus, P2, 1.0, 1.0)
    assert got == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.parametrize("r,eps", [(1, Fraction(1, 4)), (2, 1), (5, 3), (Fraction(1, 2), Fraction(1, 10))])
def test_compose_hilbert_power2_matches_rationals(r, eps):
    got = moduli.compose_modulus(L2.modulus, P2, float(r), float(eps))
    assert got == pytest.approx(float(oracles.hilbert_power2_compose(eps, r)), rel=1e-12)


def test_compose_clamps_beyond_diameter():
    assert moduli.compose_modulus(L2.modulus, P2, 1.0, 5.0) == moduli.compose_modulus(L2.modulus, P2, 1.0, 2.0)


@pytest.mark.parametrize("F", [P2, P4, EXP, COSH], ids=lambda F: F.label)
def test_compose_is_antitone_in_r(F):
    for e in (0.1, 0.5, 1.0):
        vals = [moduli.compose_modulus(L4.modulus, F, r, e) for r in (1.0, 2.0, 4.0, 8.0)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("F,space", [(P2, L2), (P4, L4), (EXP, L2), (COSH, L4)], ids=lambda v: getattr(v, "label", ""))
def test_compose_sampled_oracle(F, space):
    rng = np.random.default_rng(5)
    r, p, n = 1.5, space.p, 20000
    u = rng.normal(size=(n, space.dimension))
    v = rng.normal(size=(n, space.dimension))
    u *= (rng.uniform(0, r, n) / oracles.lp_norm(u, p))[:, None]
    v *= (rng.uniform(0, r, n) / oracles.lp_norm(v, p))[:, None]
    sep = oracles.lp_norm(u - v, p)
    gap = oracles.composed_gap(F.kind, F.p, p, u, v)
    for e in (0.05, 0.3, 1.0, 2.5):
        d = moduli.compose_modulus(space.modulus, F, r, e)
        mask = sep >= e
        assert mask.any()
        assert np.all(gap[mask] >= d)


def test_power_compose_example_and_monotonicity():
    m = moduli.power_compose_modulus(1 / 8, 1 / 4, 1.0, 2.0)
    assert m(1.0) == 1 / 512
    assert m(3.0) == pytest.approx(9 / 512, rel=1e-15)
    base = m.params["coefficient"]
    assert moduli.power_compose_modulus(1 / 4, 1 / 4, 1.0, 2.0).params["coefficient"] >= base
    assert moduli.power_compose_modulus(1 / 8, 1.0, 1.0, 2.0).params["coefficient"] >= base
    assert moduli.power_compose_modulus(1 / 8, 1 / 4, 3.0, 2.0).params["coefficient"] >= base
    with pytest.raises(InputError):
        moduli.power_compose_modulus(0.5, 1.0, 1.0, 2.0)


def test_power_norm_modulus_example():
    m = moduli.power_norm_modulus(1 / 8, 2.0)
    assert m(1.0) == 1 / 512
    assert m(2.0) == pytest.approx(4 * m(1.0), rel=1e-15)
    m4 = moduli.power_norm_modulus(1 / 8, 4.0)
    assert m4(2.0) == pytest.approx(16 * m4(1.0), rel=1e-15)
    with pytest.raises(InputError):
        moduli.power_norm_modulus(0.0, 2.0)


def test_power_norm_modulus_sampled_hilbert():
    rng = np.random.default_rng(8)
    u = rng.normal(size=(20000, 3)) * rng.uniform(0, 10, (20000, 1))
    v = rng.normal(size=(20000, 3)) * rng.uniform(0, 10, (20000, 1))
    ok = np.linalg.norm(u - v, axis=1) >= 1.0
    gap = oracles.composed_gap("power", 2.0, 2.0, u[ok], v[ok])
    assert np.all(gap >= 1 / 512)
    # the true Hilbert gap is ||u - v||^2 / 8
    assert gap.min() >= 1 / 8 - 1e-9


def _hand_psi():
    mod = Modulus(lambda s: s * s / 4, "hand", {})
    return moduli.PsiFunction(lambda t: t * t / 2, lambda t: t, mod, "t^2/2")


def test_psi_compose_hand_example():
    psi = _hand_psi()
    for eps in (0.1, 0.5, 1.0, 2.0):
        e = Fraction(eps)
        w = moduli.WitnessPair(0.0, float((e / 8) ** 2 / 16))
        expected = min(e * e / 16, (e / 4) * Fraction(1, 2) * (e / 4), e * e / 1024)
        got = moduli.psi_compose_modulus(psi, L2.modulus, w, eps)
        assert got == pytest.approx(float(expected), rel=1e-12)
        assert got <= psi.modulus(eps / 2)


def test_psi_compose_requires_witness_and_clamp():
    psi = _hand_psi()
    with pytest.raises(InputError):
        moduli.psi_compose_modulus(psi, L2.modulus, None, 1.0)
    bad = Modulus(lambda e: e, "unclamped", {})
    with pytest.raises(InputError):
        moduli.psi_compose_modulus(psi, bad, moduli.WitnessPair(0.0, 1e-3), 1.0)


def test_hand_witness_validates():
    psi = _hand_psi()
    for e in (0.1, 1.0):
        moduli.WitnessPair(0.0, e * e / 16).validate(psi, L2.modulus, e)
    with pytest.raises(InputError):
        moduli.WitnessPair(0.0, 1.0).validate(psi, L2.modulus, 0.1)


@pytest.mark.parametrize("F,space", [(P2, L2), (P4, L4), (P4, L2), (EXP, L4), (COSH, L4)], ids=lambda v: getattr(v, "label", ""))
def test_stock_witnesses_validate(F, space):
    for e in (0.01, 0.1, 1.0, 3.0):
        w = moduli.stock_witness(F, space, e)
        assert w.K_eps == 0.0 and w.xi_eps > 0


def test_no_stock_witness_for_slow_power():
    assert moduli.stock_witness(P2, L4, 1.0) is None
    assert moduli.psi_composed_modulus(P2, L4) is None


def test_psi_dominates_power_compose_coefficient():
    # min{B/2^p, A K/8^p} eps^p <= psi value at matching parameters
    A = L2.power_type_constant
    coeff = moduli.power_compose_modulus(A, 1 / 8, 1.0, 2.0).params["coefficient"]
    glob = moduli.psi_composed_modulus(P2, L2)
    for e in np.geomspace(1e-3, 10, 30):
        # the stock witness is shaved by a relative 1e-9 against rounding
        assert coeff * e**2 * (1 - 2e-9) <= glob(e)


@pytest.mark.parametrize("F,space", [(P2, L2), (P4, L4), (EXP, L2), (COSH, L4)], ids=lambda v: getattr(v, "label", ""))
def test_psi_global_sampled_oracle(F, space):
    glob = moduli.psi_composed_modulus(F, space)
    rng = np.random.default_rng(9)
    n, p = 20000, space.p
    u = rng.normal(size=(n, space.dimension)) * rng.uniform(0, 3, (n, 1))
    v = rng.normal(size=(n, space.dimension)) * rng.uniform(0, 3, (n, 1))
    sep = oracles.lp_norm(u - v, p)
    gap = oracles.composed_gap(F.kind, F.p, p, u, v)
    for e in (0.1, 0.5, 2.0):
        mask = sep >= e
        assert np.all(gap[mask] >= glob(e))


def test_prox_radius_bound_example():
    assert moduli.prox_radius_bound(P2, 1.0, 1.0) == 10.0
    assert moduli.prox_radius_bound(P2, 1e-3, 1e-9) >= 1.0


def test_prox_uc_modulus_example():
    ball = moduli.composed_modulus(L2.modulus, P2, 10.0)
    got = moduli.prox_uc_modulus(P2, L2.modulus, 10.0, 1.0)
    assert got == pytest.approx(min(0.5, 0.2 * ball(0.5)), rel=1e-15)
    eps = Fraction(1, 2)
    assert got == pytest.approx(float(Fraction(2, 10) * oracles.hilbert_power2_compose(eps, 10)), rel=1e-12)
    for e in (0.1, 1.0, 5.0):
        assert moduli.prox_uc_modulus(EXP, L4.modulus, 3.0, e) <= e / 2


def test_prox_uc_alt_at_lambda_one_is_prox_uc():
    for F in (P2, EXP, COSH):
        for e in (0.1, 1.0):
            assert moduli.prox_uc_modulus_alt(F, L2.modulus, 4.0, 1.0, e) == moduli.prox_uc_modulus(F, L2.modulus, 4.0, e)


def test_prox_uc_alt_power_is_lambda_invariant():
    # lam Phi(t/lam) = Phi(t)/phi(lam) for power Phi, so both prox maps coincide
    vals = [moduli.prox_uc_modulus_alt(P2, L2.modulus, 10.0, lam, 1.0) for lam in (1.0, 0.5, 0.1)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-9) and vals[0] == pytest.approx(vals[2], rel=1e-9)


@pytest.mark.parametrize("F", [EXP, COSH], ids=lambda F: F.label)
def test_prox_uc_alt_strictly_decreases(F):
    for space in (L2, L4):
        for R in (2.0, 10.0):
            for e in (0.1, 0.5, 1.0, 2.0):
                vals = [moduli.prox_uc_modulus_alt(F, space.modulus, R, lam, e) for lam in (1.0, 0.5, 0.1)]
                assert vals[0] > vals[1] > vals[2] > 0


def test_prox_uc_alt_rejects_bad_lambda():
    with pytest.raises(InputError):
        moduli.prox_uc_modulus_alt(P2, L2.modulus, 1.0, 1.5, 0.1)


@pytest.mark.parametrize("p,q", [(2.0, 2.0), (4.0, 4.0), (2.0, 4.0)])
def test_lambda_threshold_structure(p, q):
    sp = NormedSpace(2, p)
    F = YoungFunction.power(q)
    for eps, beta, zeta in [(0.5, 1.0, 1.0), (0.1, 2.0, 3.0), (1.0, 0.3, 0.5)]:
        got = moduli.lambda_threshold(F, sp.modulus, eps, beta, zeta)
        ref = oracles.lambda_threshold_power(p, q, eps, beta, zeta)
        assert got == pytest.approx(float(ref), rel=1e-12)
        assert got <= 1


def test_lambda_threshold_decreases_in_zeta():
    vals = [moduli.lambda_threshold(EXP, L2.modulus, 0.5, 1.0, z) for z in (1, 10, 100, 1e4)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(InputError):
        moduli.lambda_threshold(EXP, L2.modulus, 0.5, 1.0, 0.0)


def test_hoelder_constant():
    assert moduli.hoelder_constant(1 / 8, 2.0, 1.0) == pytest.approx(16 * math.sqrt(40), rel=1e-15)
    assert moduli.hoelder_constant(1 / 8, 2.0, 3.0) == pytest.approx(3 * moduli.hoelder_constant(1 / 8, 2.0, 1.0), rel=1e-15)
    assert moduli.hoelder_constant(0.05, 4.0, 2.0) == pytest.approx(float(oracles.hoelder_L(0.05, 4, 2)), rel=1e-14)


def _hilbert_quadratic_renorm(space):
    f = lambda X: 0.5 * np.sum(np.asarray(X) ** 2, axis=-1)  # noqa: E731
    fmod = Modulus(lambda e: e * e / 8, "hilbert", {})
    omega = lambda e: min(math.sqrt(2 * e), 1 - 1e-9)  # noqa: E731
    return moduli.renorm(f, fmod, omega, 0.1, space)


def test_renorm_hilbert_quadratic_is_scaled_norm():
    sp = NormedSpace(3, 2.0)
    rn = _hilbert_quadratic_renorm(sp)
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(1000, 3))
    ratio = rn.gauge(dirs) / np.linalg.norm(dirs, axis=1)
    assert np.ptp(ratio) <= 1e-6 * ratio.mean()
    assert not rn.notes


def test_renorm_gauge_homogeneous_and_sandwiched():
    sp = NormedSpace(2, 4.0)
    f = lambda X: np.sum(np.abs(np.asarray(X)) ** 4, axis=-1) / 4 + 0.5 * np.asarray(X)[..., 0] ** 2  # noqa: E731
    fmod = Modulus(lambda e: moduli.power_norm_modulus(sp.power_type_constant, 4.0)(e), "pcase", {})
    omega = lambda e: min((4 * e / 2) ** 0.25 * (1 - 1e-9), 1 - 1e-9)  # noqa: E731
    rn = moduli.renorm(f, fmod, omega, 0.1, sp)
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10000, 2)) * rng.uniform(0.01, 5, (10000, 1))
    g = rn.gauge(X)
    nx = oracles.lp_norm(X, 4.0)
    assert np.all(nx / rn.alpha <= g * (1 + 1e-12))
    assert np.all(g <= nx / rn.beta * (1 + 1e-12))
    c = rng.uniform(-3, 3, 10000)
    assert np.allclose(rn.gauge(X * c[:, None]), np.abs(c) * g, rtol=1e-10)


def test_renorm_symmetrizes_and_validates():
    sp = NormedSpace(2, 2.0)
    f = lambda X: 0.5 * np.sum(np.asarray(X) ** 2, axis=-1) + 0.1 * np.asarray(X)[..., 0]  # noqa: E731
    fmod = Modulus(lambda e: e * e / 8, "hilbert", {})
    rn = moduli.renorm(f, fmod, lambda e: min(math.sqrt(2 * e), 1 - 1e-9), 0.1, sp)
    assert rn.notes
    with pytest.raises(InputError):
        moduli.renorm(f, fmod, lambda e: 1.0, 0.1, sp)


def test_modulus_json_and_inverse():
    m = moduli.composed_modulus(L2.modulus, EXP, 2.0)
    js = m.to_json()
    assert js["provenance"] == "compose_modulus" and len(js["samples"]) == 5
    t = m(0.7)
    e = m.inverse(t, cap=4.0)
    assert e >= 0.7 * (1 - 1e-9)
