import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fppkn.predictor import (
    GumbelSpec,
    LogZLaw,
    eta,
    eta_k,
    g_gamma,
    gamma_threshold,
    gumbel_statistic,
    limit_cdf,
    limit_sample,
    minimizer_k,
    moment_diagnostics,
    phi,
    predict,
    psi,
    stirling_a,
    theta,
)
from fppkn.weights import LogFrechet, NegPowerExp, parse_model, scale_un

E = math.e


# unit values, hand-derived
@pytest.mark.parametrize("x, expected", [(2, 2.0), (2.5, 2 * math.exp(0.25)), (1.1, math.exp(0.1)), (3, 3.0)])
def test_eta_values(x, expected):
    assert eta(x) == pytest.approx(expected, rel=1e-12)


def test_eta_domain():
    with pytest.raises(ValueError):
        eta(0.5)
    assert eta_k(2.5) in (2, 3)


@settings(max_examples=500)
@given(x=st.floats(1.0, 100.0))
def test_eta_lies_between_floor_and_ceil(x):
    assert math.floor(x) - 1e-12 <= eta(x) <= math.ceil(x) + 1e-12


def test_g_gamma_values():
    for gamma in (0, 1, 5):
        assert g_gamma(gamma, 1) == 1.0
    assert g_gamma(2, 2) == pytest.approx(2 / E, rel=1e-15)
    assert g_gamma(0, 3.7) == 3.7
    assert np.allclose(g_gamma(2, np.array([1.0, 2.0, 3.0])), [1, 2 / E, 3 * math.exp(-4 / 3)])


def test_minimizer_k_values():
    assert minimizer_k(1) == (1, 1.0, False)
    k, v, tie = minimizer_k(2)
    assert (k, tie) == (2, False) and v == pytest.approx(2 / E, rel=1e-15)
    k, v, tie = minimizer_k(2 * math.log(2))
    assert (k, tie) == (1, True) and v == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=1000)
@given(gamma=st.floats(0.0, 20.0))
def test_minimizer_matches_scan(gamma):
    k, v, _ = minimizer_k(gamma)
    ks = range(1, math.ceil(gamma) + 3)
    best = min(g_gamma(gamma, j) for j in ks)
    assert v == pytest.approx(best, rel=1e-12)
    assert g_gamma(gamma, k) == pytest.approx(v, rel=1e-12)
    if gamma > 2 * math.log(2) + 1e-9:
        assert v < 1


def test_gamma_thresholds():
    assert gamma_threshold(1) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert gamma_threshold(2) == pytest.approx(6 * math.log(1.5), rel=1e-15)
    for k in range(1, 11):
        gk = gamma_threshold(k)
        assert abs(g_gamma(gk, k) - g_gamma(gk, k + 1)) <= 1e-12
        assert gamma_threshold(k + 1) > gk
        if k <= 3:
            assert minimizer_k(gk)[2]


def test_theta_values():
    assert theta(0) == 1
    assert theta(1) == 1
    assert theta(2) == 4


def test_stirling_a():
    assert stirling_a(1) == pytest.approx(1.0, rel=1e-15)
    assert stirling_a(2) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert stirling_a(3) == pytest.approx((2 * math.pi) ** 1.5 / math.sqrt(6 * math.pi), rel=1e-15)
    for k in range(1, 51):
        ref = math.exp(0.5 * k * math.log(2 * math.pi) - 0.5 * math.log(2 * math.pi * k))
        assert stirling_a(k) == pytest.approx(ref, rel=1e-12)
        assert stirling_a(k + 1) > stirling_a(k)
    assert math.isfinite(stirling_a(150))


def test_psi_and_phi():
    assert psi(0) == 1.0 and psi(1) == 0.0
    assert psi(0.5) == pytest.approx(math.log(2), rel=1e-15)
    grid = np.linspace(0, 1, 1000)
    vals = [psi(q) for q in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    for q in np.linspace(1e-6, 0.1, 200):
        assert abs(psi(q) - (1 - q / 2)) <= q * q
    assert phi(1) == -1.0
    assert phi(0.5) < -1 and phi(2) < -1


def test_limit_law_helpers():
    a = stirling_a(2)
    assert limit_cdf(-math.log(a), a) == pytest.approx(1 - math.exp(-1), rel=1e-14)
    u = np.linspace(0.01, 0.99, 50)
    assert np.allclose(limit_cdf(limit_sample(u, a), a), u, rtol=1e-12)


def test_predict_very_small():
    model = parse_model("powered:uniform:lambda=1:rule=gammalog(gamma=2)")
    pred = predict(model, 10**5)
    assert pred.H_value == 2 and pred.H_tie is None
    assert pred.W_center == pytest.approx(2 / E, rel=1e-14)
    assert isinstance(pred.limit_law, GumbelSpec)
    assert pred.limit_law.a_k == pytest.approx(math.sqrt(math.pi))
    assert pred.W_lower <= pred.W_upper


def test_predict_very_small_rate_scaling():
    lam, n = 4.0, 10**4
    pred = predict(parse_model(f"powered:uniform:lambda={lam}:rule=gammalog(gamma=2)"), n)
    assert pred.W_center == pytest.approx(2 / E / lam ** (2 / math.log(n)), rel=1e-12)


def test_predict_small_gamma_and_ties():
    pred = predict(parse_model("powered:exp:lambda=1:rule=gammalog(gamma=1)"), 1000)
    assert pred.H_value == 1 and isinstance(pred.limit_law, LogZLaw)
    tie = predict(parse_model(f"powered:uniform:lambda=1:rule=gammalog(gamma={gamma_threshold(2)!r})"), 1000)
    assert tie.H_tie == (2, 3) and tie.H_value is None and tie.limit_law is None
    neg = predict(NegPowerExp(1.5), 1000)
    assert neg.H_band == (2.0, 3.0) and neg.W_center is None


def test_predict_constant_s():
    n = 10**4
    pred = predict(parse_model("powered:exp:lambda=1:rule=const(s=1)"), n)
    assert pred.W_center == pytest.approx(math.log(n) / n, rel=1e-12)
    assert pred.H_center == pytest.approx(math.log(n))
    s = 0.5
    pred = predict(parse_model(f"powered:exp:lambda=1:rule=const(s={s})"), n)
    expected = n ** -s * s * math.log(n) / (s * special.gamma(1 + 1 / s) ** s)
    assert pred.W_center == pytest.approx(expected, rel=1e-12)


def test_predict_intermediate():
    n = 10**4
    model = parse_model("powered:uniform:lambda=1:rule=powlog(c=1,a=0.75)")
    pred = predict(model, n)
    s, u = model.sn(n), scale_un(model, n)
    x = s * math.log(n)
    eps = math.sqrt(s * math.log(math.log(n)))
    assert pred.W_lower == pytest.approx((1 - eps) * E * math.floor(x) * u, rel=1e-12)
    assert pred.W_upper == pytest.approx(E * eta(x) * u, rel=1e-12)
    assert pred.H_center == pytest.approx(x)
    assert pred.ingredients["eps_n"] == pytest.approx(eps)


def test_predict_logfrechet():
    n = round(math.exp(8))
    pred = predict(LogFrechet(1.0, 3.0), n)
    logn = math.log(n)
    u = math.exp(-logn ** (1 / 3))
    assert pred.u_n == pytest.approx(u, rel=1e-9)
    assert pred.W_center == pytest.approx(E * u * logn ** (1 / 3) / 3, rel=1e-9)
    assert pred.W_lower <= pred.W_center <= pred.W_upper


def test_predict_to_dict_is_json_ready():
    import json

    d = predict(parse_model("powered:uniform:lambda=1:rule=gammalog(gamma=2)"), 1000).to_dict()
    assert json.loads(json.dumps(d))["limit_law"]["k"] == 2


def test_gumbel_statistic():
    n, gamma = 10**4, 2.0
    s = gamma / math.log(n)
    g = 2 / E
    t0 = gumbel_statistic(g, gamma, 2, n, s)
    # only the centering shift remains, and s_n log n - gamma vanishes
    assert t0 == pytest.approx((1 / s) * (-s * math.log(s) / 2), rel=1e-12)
    spec = predict(parse_model("powered:uniform:lambda=1:rule=gammalog(gamma=2)"), n).limit_law
    assert spec.statistic(g) == pytest.approx(t0)
    with pytest.raises(ValueError):
        gumbel_statistic(0.5, 1.0, 1, n, 1 / math.log(n))
    with pytest.raises(ValueError):
        gumbel_statistic(0.5, gamma_threshold(2), 2, n, gamma_threshold(2) / math.log(n))
    with pytest.raises(ValueError):
        gumbel_statistic(0.5, 2.0, 3, n, s)


def test_moment_diagnostics():
    n = 10**4
    model = parse_model("powered:uniform:lambda=1:rule=const(s=0.2)")
    u, x = scale_un(model, n), 0.2 * math.log(n)
    b = E * eta(x) * u
    rec = moment_diagnostics(model, n, 2, b, 0.7 * E * math.floor(x) * u)
    assert rec.var_ratio_sum == 0.0
    assert rec.mean_Nk > 1
    # mean of N_k(b) from the closed form convolution
    from fppkn.convolution import conv_closed_uniform

    ref = (n - 2) * conv_closed_uniform(5.0, 2, b).value
    assert rec.mean_Nk == pytest.approx(ref, rel=1e-10)


def test_moment_lower_sum_decreases_with_n():
    model = parse_model("powered:uniform:lambda=1:rule=const(s=0.125)")
    sums = []
    for n in (10**4, 10**5, 10**6):
        x = 0.125 * math.log(n)
        d = 0.7 * E * math.floor(x) * scale_un(model, n)
        sums.append(moment_diagnostics(model, n, eta_k(x), E * eta(x) * scale_un(model, n), d).log_lower_sum)
    assert sums[0] > sums[1] > sums[2]
