import math

import numpy as np
import pytest
from scipy import integrate, special

import xxzdrf.asymptotics as lab
from xxzdrf.asymptotics import (AsymCase1D, FitError, ModelIntegralSpec, SpecError, beta1d_integral,
                                beta1d_prediction, beta1d_side_ratio, fit_power_law, fit_two_sided,
                                lemma_constant, lemma_integral, log_grid, model_exponents,
                                model_integral, model_integral_mc, model_integral_prediction)


# ---- fitting ------------------------------------------------------------------------
def test_fit_pure_power():
    xs = log_grid(1e-4, 1e-1, 6)
    mu, A, _ = fit_power_law(xs, 2 * xs**0.7, 0)
    assert mu == pytest.approx(0.7, abs=1e-6) and A == pytest.approx(2.0, abs=1e-6)


def test_fit_with_smooth_part():
    xs = log_grid(1e-4, 1e-1, 6)
    mu, A, _ = fit_power_law(xs, 1 + xs + 3 * xs**1.4, 1)
    assert mu == pytest.approx(1.4, abs=1e-4) and A == pytest.approx(3.0, abs=1e-4)


def test_fit_with_contamination():
    xs = log_grid(1e-4, 1e-2, 12)
    mu, _, _ = fit_power_law(xs, xs**2.5 * (1 + 0.1 * xs), 0)
    assert abs(mu - 2.5) < 0.01


def test_fit_two_sided_recovers_both_amplitudes():
    xs = log_grid(1e-4, 1e-2, 5)
    smooth = lambda x: 0.3 - 2 * x + x * x
    mu, ap, an, _ = fit_two_sided(xs, smooth(xs) + 1.5 * xs**0.35, smooth(-xs) - 0.5 * xs**0.35, 2)
    assert mu == pytest.approx(0.35, abs=1e-5)
    assert (ap, an) == pytest.approx((1.5, -0.5), abs=1e-4)


def test_fit_needs_enough_points():
    xs = np.array([1e-3, 2e-3, 4e-3])
    with pytest.raises(FitError):
        fit_power_law(xs, xs**0.5, 1)


# ---- one-dimensional beta integrals ------------------------------------------------------
@pytest.mark.parametrize("dp, dm", lab.CASE_A_DELTAS)
def test_case_a_closed_form(dp, dm):
    case = lab.affine_case(dp, dm, "a")
    for x in (1e-3, 0.05, 0.3):
        exact = dp * dm * (2 * x) ** (dp + dm - 1) * special.beta(dp, dm)
        assert beta1d_integral(case, x) == pytest.approx(exact, rel=1e-9)
        assert beta1d_prediction(case, x)[0] == pytest.approx(exact, rel=1e-12)
        assert beta1d_integral(case, -x) == 0.0
        assert beta1d_prediction(case, -x)[0] == 0.0


def test_zero_density_gives_zero():
    case = AsymCase1D((0.0, 1.0), (0.0, -1.0), 0.4, 0.6, density=(0.0,))
    assert beta1d_integral(case, 0.01) == 0.0


def test_integral_against_scipy():
    # a curved case b, independent adaptive quadrature with explicit breakpoints
    case = AsymCase1D((0.0, 1.0, 0.5), (0.0, 2.0, -0.3), 0.6, 0.8, density=(1.0, 0.5))
    for x in (0.02, -0.02):
        zp = np.polynomial.Polynomial(case.z_plus) + x
        zm = np.polynomial.Polynomial(case.z_minus) + x
        f = lambda t: 0.48 * (1 + 0.5 * t) * max(zp(t), 0) ** -0.4 * max(zm(t), 0) ** -0.2 \
            if zp(t) > 0 and zm(t) > 0 else 0.0
        roots = sorted(r.real for p in (zp, zm) for r in p.roots() if abs(r.imag) < 1e-14 and -1 < r.real < 1)
        edges = [-1.0] + roots + [1.0]
        ref = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=400)[0] for a, b in zip(edges, edges[1:]))
        assert beta1d_integral(case, x) == pytest.approx(ref, rel=1e-7)


def test_case_b_side_index_and_ratio():
    case = lab.affine_case(0.4, 0.3, "b")
    assert case.kind == "b"
    sp, sm = case.slopes()
    assert -np.sign(sp) * np.sign(sp - sm) == 1
    assert beta1d_side_ratio(case) == pytest.approx(math.sin(0.4 * math.pi) / math.sin(0.3 * math.pi))
    ratio = beta1d_prediction(case, 1e-3)[0] / beta1d_prediction(case, -1e-3)[0]
    assert ratio == pytest.approx(beta1d_side_ratio(case), rel=1e-14)


def test_case_b_pole_flag():
    val, flags = beta1d_prediction(lab.affine_case(0.4, 0.6, "b"), 1e-3)
    assert math.isnan(val) and "gamma_pole" in flags


def test_case_validation():
    with pytest.raises(SpecError):
        AsymCase1D((0.1, 1.0), (0.0, -1.0), 0.4, 0.6).validate()
    with pytest.raises(SpecError):
        AsymCase1D((0.0, 1.0), (0.0, 1.0), 0.4, 0.6).validate()


def test_regular_case_is_smooth():
    rep = lab.regular_case_check()
    assert rep["pass"] and rep["fitted"] > 1.95


# ---- auxiliary lemma ---------------------------------------------------------------------
def test_lemma_integral_against_scipy():
    a0, b0, delta = -0.3, -0.4, 0.5
    for x in (1e-3, 0.05):
        ref = integrate.quad(lambda t: (t + x) ** b0, 0, delta, weight="alg", wvar=(a0, 0),
                             epsabs=0, epsrel=1e-13, limit=200)[0]
        assert lemma_integral(a0, b0, delta, x) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("a0, b0", [(-0.3, -0.4), (0.2, -0.6), (0.5, 0.3), (-0.5, 0.7)])
def test_lemma_constant_sign(a0, b0):
    c = lemma_constant(a0, b0)
    assert (c > 0) == (math.sin(math.pi * b0) * special.gamma(-1 - a0 - b0) < 0)


@pytest.mark.parametrize("a0, b0", [(-0.3, -0.4), (0.2, -0.6)])
def test_lemma_fit(a0, b0):
    rep = lab.lemma_beta_aux_check(a0, b0)
    assert abs(rep["exponent"] / (1 + a0 + b0) - 1) < 0.02
    assert abs(rep["amplitude"] / lemma_constant(a0, b0) - 1) < 0.05


# ---- model integral ------------------------------------------------------------------------
def test_golden_exponents():
    g = lab.model_golden_spec()
    assert (g.n_r, g.eps_r, g.xi_r, g.u, g.v, g.delta_plus, g.delta_minus) == ((2,), (1,), (1.0,), 0.3, 1.0, 0.8, 0.8)
    assert g.theta == pytest.approx(2.1)
    ex = model_exponents(g)
    assert ex["varsigma"] == -1
    assert ex["sigma_plus"] > 0 and ex["sigma_minus"] > 0
    # both exponents count on the + side when |u| < v
    assert ex["nu_plus"] == pytest.approx(1.6)
    assert ex["nu_minus"] == pytest.approx(0.5 * 4 - 0.5)


def test_side_bookkeeping_at_zero_drift():
    spec = ModelIntegralSpec((1, 1), (1, 1), (1.0, 0.5), 0.0, 1.0, 0.3, 0.45)
    ex = model_exponents(spec)
    assert ex["nu_plus"] == pytest.approx(-(1 + ex["varsigma"]) / 4 + 0.75)
    assert ex["nu_minus"] == pytest.approx(0.5 * 2 - (1 - ex["varsigma"]) / 4)


def test_golden_value():
    val, err = model_integral(lab.model_golden_spec(), 0.01)
    assert err < 1e-6
    assert val == pytest.approx(lab.MODEL_GOLDEN_VALUE, abs=1e-6)


def brute_gaussian(spec, x, n, seed):
    """Plain Monte-Carlo under exp(-|y|^2), independent of the library's sampler."""
    rng = np.random.default_rng(seed)
    n_r = np.array(spec.n_r)
    k = int(n_r.sum())
    eps, xi = np.repeat(spec.eps_r, n_r), np.repeat(spec.xi_r, n_r)
    y = rng.normal(scale=math.sqrt(0.5), size=(n, k))
    V = np.ones(n)
    start = 0
    for m in n_r:
        for a in range(start, start + m):
            for b in range(a + 1, start + m):
                V *= (y[:, a] - y[:, b]) ** 2
        start += m
    quad, lin = 0.5 * (y**2 * eps).sum(1), (y * xi).sum(1)
    F = np.ones(n)
    for ups, d in ((1, spec.delta_plus), (-1, spec.delta_minus)):
        z = x + quad - (spec.u + ups * spec.v) * lin
        F *= np.where(z > 0, np.abs(z) ** (d - 1), 0.0)
    vals = V * F * math.pi ** (k / 2)
    return vals.mean(), vals.std() / math.sqrt(n)


@pytest.mark.parametrize("x", [0.01, -0.01])
def test_three_variable_mc_against_brute_force(x):
    spec = lab.MODEL_SPECS["triple_mc"]
    ref, ref_se = brute_gaussian(spec, x, 2_000_000, seed=11)
    r = model_integral_mc(spec, [x], n_samples=4096, seed=3)
    assert abs(r.values[0] - ref) < 3 * math.hypot(ref_se, r.stderr[0])


def test_two_variable_mc_against_quadrature():
    spec = lab.MODEL_SPECS["pair_subsonic"]
    xs = np.array([0.01, -0.01, 0.001])
    r = model_integral_mc(spec, xs, n_samples=4096, seed=0)
    for x, v, se in zip(xs, r.values, r.stderr):
        assert abs(v - model_integral(spec, x)[0]) < 3 * se


def test_mc_is_deterministic_and_worker_independent():
    spec = lab.MODEL_SPECS["triple_mc"]
    a = model_integral_mc(spec, [0.01, -0.003], n_samples=512, seed=42, workers=1)
    b = model_integral_mc(spec, [0.01, -0.003], n_samples=512, seed=42, workers=2)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    c = model_integral_mc(spec, [0.01, -0.003], n_samples=512, seed=43)
    assert not np.array_equal(a.values, c.values)


def test_mc_refuses_strong_singularities():
    spec = ModelIntegralSpec((1, 1, 1), (1, 1, 1), (1.0, 0.8, 1.2), 1.5, 1.0, 0.1, 0.75)
    with pytest.raises(SpecError):
        model_integral_mc(spec, [0.01])


def test_dimension_limit():
    spec = ModelIntegralSpec((5,), (1,), (1.0,), 0.3, 1.0, 0.6, 0.6)
    with pytest.raises(SpecError):
        model_integral(spec, 0.01)


def test_monotone_when_gates_are_plain_heavisides():
    spec = ModelIntegralSpec((1, 1), (1, -1), (0.6, 1.0), 0.3, 1.0, 1.0, 1.0)
    vals = [model_integral(spec, x)[0] for x in (-0.05, -0.01, 0.0, 0.01, 0.05)]
    assert all(v >= 0 for v in vals)
    assert np.all(np.diff(vals) >= 0)


def test_prediction_pole_flag():
    spec = ModelIntegralSpec((2,), (1,), (1.0,), 0.3, 1.0, 0.25, 0.25)  # theta = 2 - 1.5 + 0.5
    assert spec.theta == pytest.approx(1.0)
    val, flags = model_integral_prediction(spec, 0.01)
    assert math.isnan(val) and flags == ["gamma_pole"]


@pytest.fixture(scope="module")
def golden_samples():
    g = lab.model_golden_spec()
    xs = log_grid(1e-4, 1e-2, 4)
    yp, yn, _, _, _ = lab.model_samples(g, xs)
    return g, xs, yp, yn


def test_golden_spec_exponent_fit(golden_samples):
    g, xs, yp, yn = golden_samples
    assert np.all(yp >= 0) and np.all(yn >= 0)
    # theta = 2.1 sits next to the x^2 smooth term, so the smooth part needs degree 3
    mu, ap, an, _ = fit_two_sided(xs, yp, yn, 3)
    assert abs(mu / g.theta - 1) < 0.05
    assert abs((ap / an) / lab.model_side_ratio(g) - 1) < 0.10


# ---- identities --------------------------------------------------------------------------
def test_identity_checks():
    rep = lab.identity_checks(seed=0)
    assert all(e["pass"] for e in rep), rep
    names = [e["name"] for e in rep]
    assert "gaudin_mehta(n=3)" in names and "euler_beta(0.5,0.5)" in names


def test_euler_beta_quadrature():
    assert lab.euler_beta_quadrature(0.5, 0.5) == pytest.approx(math.pi, rel=1e-10)
    assert lab.euler_beta_quadrature(2.0, 3.0) == pytest.approx(1 / 12, rel=1e-12)
