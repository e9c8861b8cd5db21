import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fppkn.weights import (
    Constant,
    Exponential,
    GammaOverLog,
    LogFrechet,
    ModelSpecError,
    NegPowerExp,
    PowerOfLog,
    Powered,
    Table,
    Uniform,
    classify_regime,
    format_model,
    parse_model,
    regime_params,
    sample_weight,
    scale_un,
    scale_un_bisect,
)

MODELS = [
    "powered:uniform:lambda=1:rule=const(s=1)",
    "powered:uniform:lambda=2.5:rule=gammalog(gamma=2)",
    "powered:exp:lambda=1:rule=const(s=0.5)",
    "powered:exp:lambda=0.7:rule=powlog(c=1,a=0.75)",
    "logfrechet:rho=1:alpha=3",
    "logfrechet:rho=2:alpha=1.5",
    "negpowexp:gamma=1.5",
    "powered:uniform:lambda=1:rule=table(100=0.3,1000=0.2,regime=intermediate)",
]


@pytest.mark.parametrize("text", MODELS)
def test_parse_format_roundtrip(text):
    model = parse_model(text)
    assert parse_model(format_model(model)) == model


@given(
    base=st.sampled_from(["uniform", "exp"]),
    lam=st.floats(0.1, 10),
    rule=st.one_of(
        st.floats(0.01, 5).map(lambda s: f"const(s={s!r})"),
        st.floats(0.1, 10).map(lambda g: f"gammalog(gamma={g!r})"),
        st.tuples(st.floats(0.1, 5), st.floats(0.01, 0.99)).map(lambda t: f"powlog(c={t[0]!r},a={t[1]!r})"),
    ),
)
def test_parse_format_roundtrip_property(base, lam, rule):
    model = parse_model(f"powered:{base}:lambda={lam!r}:rule={rule}")
    assert parse_model(format_model(model)) == model


@pytest.mark.parametrize("bad", [
    "",
    "powered:uniform",
    "powered:weibull:rule=const(s=1)",
    "powered:uniform:rule=const(t=1)",
    "powered:uniform:rule=const(s=-1)",
    "powered:uniform:rule=powlog(c=1,a=1.5)",
    "logfrechet:rho=1",
    "negpowexp:gamma=0",
])
def test_parse_rejects(bad):
    with pytest.raises(ModelSpecError):
        parse_model(bad)


@pytest.mark.parametrize("text", MODELS[:-1])
@pytest.mark.parametrize("n", [10, 1000, 10**6])
def test_scale_un_solves_defining_equation(text, n):
    model = parse_model(text)
    u = scale_un(model, n)
    assert n * model.cdf(n, u) == pytest.approx(1.0, rel=1e-9)
    assert u == pytest.approx(scale_un_bisect(model, n), rel=1e-9)


def test_scale_un_closed_forms():
    n = 10**4
    # uniform base: u_n = (lam n)^(-s)
    m = Powered(Uniform(2.0), Constant(0.5))
    assert scale_un(m, n) == pytest.approx((2.0 * n) ** -0.5, rel=1e-12)
    # exponential base: u_n = (-log(1 - 1/n) / lam)^s
    m = Powered(Exponential(1.0), Constant(1.0))
    assert scale_un(m, n) == pytest.approx(-math.log1p(-1 / n), rel=1e-12)
    # gamma/log n with uniform base gives u_n = e^{-gamma} for lam = 1
    m = Powered(Uniform(1.0), GammaOverLog(2.0))
    assert scale_un(m, n) == pytest.approx(math.exp(-2.0), rel=1e-12)


@settings(max_examples=200)
@given(text=st.sampled_from(MODELS[:-1]), q=st.floats(1e-12, 1 - 1e-9), n=st.integers(3, 10**7))
def test_quantile_inverts_cdf(text, q, n):
    model = parse_model(text)
    x = model.quantile(n, q)
    assert model.cdf(n, x) == pytest.approx(q, rel=1e-7, abs=1e-12)


@given(text=st.sampled_from(MODELS[:-1]), log_q=st.floats(-700, -1e-6))
def test_log_quantile_matches_quantile(text, log_q):
    model = parse_model(text)
    n = 1000
    x = model.log_quantile(n, log_q)
    if math.exp(log_q) > 1e-300:
        assert x == pytest.approx(model.quantile(n, math.exp(log_q)), rel=1e-8)
    assert model.log_cdf(n, x) == pytest.approx(log_q, rel=1e-7)


@given(text=st.sampled_from(MODELS[:-1]), a=st.floats(1e-6, 1 - 1e-6), b=st.floats(1e-6, 1 - 1e-6))
def test_sampling_is_monotone(text, a, b):
    model = parse_model(text)
    lo, hi = sorted((a, b))
    assert sample_weight(model, 500, lo) <= sample_weight(model, 500, hi)


@pytest.mark.parametrize("text", MODELS[:-1])
def test_density_is_cdf_derivative(text):
    model = parse_model(text)
    n = 1000
    for q in (0.01, 0.3, 0.7):
        x = model.quantile(n, q)
        h = 1e-6 * x
        num = (model.cdf(n, x + h) - model.cdf(n, x - h)) / (2 * h)
        assert model.density(n, x) == pytest.approx(num, rel=1e-5)


def test_regimes():
    assert classify_regime(parse_model("powered:uniform:rule=gammalog(gamma=2)")).kind == "very_small"
    assert classify_regime(parse_model("powered:uniform:rule=gammalog(gamma=2)")).param == 2.0
    assert classify_regime(parse_model("powered:exp:rule=powlog(c=1,a=0.75)")).kind == "intermediate"
    assert classify_regime(parse_model("powered:exp:rule=powlog(c=1,a=0.25)")).kind == "other"
    assert str(classify_regime(parse_model("powered:exp:rule=const(s=0.5)"))) == "constant(0.5)"
    assert classify_regime(LogFrechet(1.0, 3.0)).kind == "intermediate"
    assert classify_regime(LogFrechet(1.0, 2.0)).kind == "other"
    assert classify_regime(NegPowerExp(1.5)) == classify_regime(Powered(Uniform(1.0), GammaOverLog(1.5)))
    assert classify_regime(Powered(Uniform(1.0), Table(((10, 0.1),)))).kind == "other"


def test_regime_params():
    rp = regime_params(Powered(Uniform(1.0), PowerOfLog(1.0, 0.75)), 10**4)
    assert rp.s_n == pytest.approx(math.log(10**4) ** -0.75)
    assert rp.p_n * rp.s_n == pytest.approx(1.0)
    with pytest.raises(ValueError):
        regime_params(Powered(Uniform(1.0), Constant(1.0)), 2)


def test_table_rule_lookup():
    rule = Table(((100, 0.3), (1000, 0.2)))
    assert rule(1000) == 0.2
    with pytest.raises(KeyError):
        rule(500)


def test_unit_examples():
    from fppkn.weights import effective_sn, model_cdf, model_quantile

    half = Powered(Uniform(1.0), Constant(0.5))
    assert model_cdf(half, 10, 0.25) == pytest.approx(0.0625, rel=1e-14)
    assert model_cdf(half, 10, 0.0) == 0.0
    lf = LogFrechet(1.0, 2.0)
    assert model_cdf(lf, 10, math.exp(-2)) == pytest.approx(math.exp(-4), rel=1e-12)
    for m in (half, lf, NegPowerExp(2.0), Powered(Exponential(1.0), Constant(1.0))):
        assert model_cdf(m, 10, 1e300) == 1.0
    ident = Powered(Uniform(1.0), Constant(1.0))
    assert model_quantile(ident, 10, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert sample_weight(ident, 10, 0.5) == pytest.approx(0.5, rel=1e-14)
    assert model_quantile(lf, 10, math.exp(-4)) == pytest.approx(math.exp(-2), rel=1e-12)
    sq = Powered(Exponential(1.0), Constant(2.0))
    assert model_quantile(sq, 10, 1 - math.exp(-1)) == pytest.approx(1.0, rel=1e-12)
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            model_quantile(ident, 10, q)
    assert sample_weight(half, 10, 1e-300) < 1e-149

    n = round(math.exp(8))
    assert scale_un(LogFrechet(1.0, 3.0), n) == pytest.approx(math.exp(-2), abs=1e-3)
    assert scale_un(Powered(Exponential(1.0), Constant(1.0)), 10) == pytest.approx(0.105361, abs=1e-6)
    for n in (10, 1000):
        m = Powered(Uniform(1.0), PowerOfLog(1.0, 0.75))
        assert scale_un(m, n) == pytest.approx(n ** -m.sn(n), rel=1e-12)

    assert effective_sn(LogFrechet(1.0, 2.0), math.exp(4)) == pytest.approx(0.25, rel=1e-12)
    assert effective_sn(NegPowerExp(3.0), math.exp(3)) == pytest.approx(1.0, rel=1e-12)
    assert effective_sn(Powered(Exponential(1.0), Constant(0.7)), 12345) == 0.7


def test_regime_examples():
    assert classify_regime(Powered(Uniform(1.0), GammaOverLog(2.0))).kind == "very_small"
    assert classify_regime(LogFrechet(1.0, 3.0)).kind == "intermediate"
    assert classify_regime(LogFrechet(1.0, 1.5)).kind == "other"


@pytest.mark.parametrize("text", [t for t in MODELS if "table" not in t])
@pytest.mark.parametrize("n", [10, 1000, 10**6])
def test_scale_un_tolerance(text, n):
    from fppkn.weights import model_cdf

    m = parse_model(text)
    assert abs(n * model_cdf(m, n, scale_un(m, n)) - 1) <= 1e-9


@settings(max_examples=200)
@given(lam=st.floats(0.1, 20), s=st.floats(0.05, 3), unit=st.floats(1e-9, 1 - 1e-9), exp=st.booleans())
def test_scaling_covariance(lam, s, unit, exp):
    base = Exponential if exp else Uniform
    scaled = sample_weight(Powered(base(lam), Constant(s)), 100, unit)
    plain = sample_weight(Powered(base(1.0), Constant(s)), 100, unit)
    assert scaled * lam**s == pytest.approx(plain, rel=1e-12)


@given(rho=st.floats(0.2, 5), alpha=st.floats(0.5, 6), logn=st.floats(2, 40))
def test_logfrechet_sn_identity(rho, alpha, logn):
    from fppkn.weights import effective_sn

    n = math.exp(logn)
    lhs = effective_sn(LogFrechet(rho, alpha), n) * math.log(n)
    assert lhs == pytest.approx(logn ** (1 / alpha) / (alpha * rho ** (1 / alpha)), rel=1e-12)
