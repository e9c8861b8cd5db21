"""Edge-weight laws for first passage percolation on the complete graph.

Three families are supported:

* ``Powered(base, rule)``: ``X = Z**s_n`` with ``Z`` uniform on ``(0, 1/lam)``
  or exponential with rate ``lam``, and ``s_n`` given by an :class:`SnRule`.
* ``LogFrechet(rho, alpha)``: ``X = exp(-(E/rho)**(1/alpha))``.
* ``NegPowerExp(gamma)``: ``X = E**(-gamma)``.

Every model exposes its CDF, quantile function (closed form, also in log
scale), the extreme-value scale ``u_n`` solving ``n F_n(u_n) = 1`` and the
effective disorder parameter ``s_n``.  Models are immutable and hashable and
can be written/parsed with the compact grammar understood by
:func:`parse_model`, e.g. ``powered:uniform:lambda=1:rule=powlog(c=1,a=0.75)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

__all__ = [
    "Uniform",
    "Exponential",
    "Constant",
    "PowerOfLog",
    "GammaOverLog",
    "Table",
    "Powered",
    "LogFrechet",
    "NegPowerExp",
    "Regime",
    "RegimeParams",
    "ModelSpecError",
    "model_cdf",
    "model_quantile",
    "sample_weight",
    "scale_un",
    "scale_un_bisect",
    "effective_sn",
    "classify_regime",
    "regime_params",
    "parse_model",
    "format_model",
]


class ModelSpecError(ValueError):
    """Invalid model parameters or an unparsable model string."""


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ModelSpecError(f"{name} must be a finite positive number, got {value!r}")


def _check_unit(q):
    if not 0.0 < q < 1.0:
        raise ValueError(f"probability must lie in the open interval (0, 1), got {q!r}")


def _log_neg_log1p_neg(q: float, log_q: float) -> float:
    """``log(-log(1 - q))`` accurate for tiny ``q`` given ``log q``."""
    if q < 1e-8:
        # -log(1-q) = q (1 + q/2 + ...)
        return log_q + q / 2.0
    return math.log(-math.log1p(-q))


# ---------------------------------------------------------------------------
# base distributions


@dataclass(frozen=True)
class Uniform:
    """Uniform law on ``(0, 1/lam)``."""

    lam: float = 1.0
    name = "uniform"

    def __post_init__(self):
        _positive("lambda", self.lam)

    @property
    def xhat(self) -> float:
        # G is C^2 on [0, 1/lam]
        return 1.0 / self.lam

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return min(1.0, self.lam * x)

    def density(self, x: float) -> float:
        return self.lam if 0 <= x < 1.0 / self.lam else 0.0

    def inverse_unit(self, q: float) -> float:
        """Quantile of the ``lam = 1`` member of the family."""
        return q

    def log_inverse_unit(self, q: float, log_q: float) -> float:
        return log_q

    def max_density(self, upper: float) -> float:
        """``max G'(y)`` for ``0 <= y <= upper``."""
        return self.lam


@dataclass(frozen=True)
class Exponential:
    """Exponential law with rate ``lam``."""

    lam: float = 1.0
    name = "exp"

    def __post_init__(self):
        _positive("lambda", self.lam)

    @property
    def xhat(self) -> float:
        return math.inf

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return -math.expm1(-self.lam * x)

    def density(self, x: float) -> float:
        return self.lam * math.exp(-self.lam * x) if x >= 0 else 0.0

    def inverse_unit(self, q: float) -> float:
        return -math.log1p(-q)

    def log_inverse_unit(self, q: float, log_q: float) -> float:
        return _log_neg_log1p_neg(q, log_q)

    def max_density(self, upper: float) -> float:
        return self.lam


BaseDistribution = Union[Uniform, Exponential]


# ---------------------------------------------------------------------------
# s_n rules


@dataclass(frozen=True)
class Constant:
    s: float

    def __post_init__(self):
        _positive("s", self.s)

    def __call__(self, n: int) -> float:
        return float(self.s)


@dataclass(frozen=True)
class PowerOfLog:
    """``s_n = c (log n)^(-a)``."""

    c: float
    a: float

    def __post_init__(self):
        _positive("c", self.c)
        if not 0.0 < self.a < 1.0:
            raise ModelSpecError(f"a must lie in (0, 1), got {self.a!r}")

    def __call__(self, n: int) -> float:
        return self.c * math.log(n) ** (-self.a)


@dataclass(frozen=True)
class GammaOverLog:
    """``s_n = gamma / log n`` (the very small regime)."""

    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            # gamma = 0 would give s_n = 0, which is not a valid weight law
            raise ModelSpecError(f"gamma must be positive, got {self.gamma!r}")

    def __call__(self, n: int) -> float:
        return self.gamma / math.log(n)


@dataclass(frozen=True)
class Table:
    """Explicit ``n -> s_n`` values, optionally with a declared regime.

    ``regime`` is one of ``None`` (treated as ``other``), ``"very_small"``
    (requires ``gamma``), ``"intermediate"`` or ``"constant"`` (requires
    ``s``); the simulator never inspects it.
    """

    values: tuple = ()
    regime: Optional[str] = None
    gamma: Optional[float] = None
    s: Optional[float] = None

    def __post_init__(self):
        items = tuple(sorted((int(k), float(v)) for k, v in dict(self.values).items()))
        for k, v in items:
            if k < 2:
                raise ModelSpecError(f"table entry for n={k} < 2")
            _positive(f"s_{k}", v)
        object.__setattr__(self, "values", items)

    def __call__(self, n: int) -> float:
        lookup = dict(self.values)
        if n not in lookup:
            raise KeyError(f"s_n table has no entry for n={n}")
        return lookup[n]


SnRule = Union[Constant, PowerOfLog, GammaOverLog, Table]


# ---------------------------------------------------------------------------
# weight models


@dataclass(frozen=True)
class Powered:
    """``X = Z**s_n`` with ``Z ~ base``."""

    base: BaseDistribution = field(default_factory=Uniform)
    rule: SnRule = field(default_factory=lambda: Constant(1.0))

    family = "powered"

    def sn(self, n: int) -> float:
        return self.rule(n)

    def cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return 1.0
        s = self.sn(n)
        try:
            y = x ** (1.0 / s)
        except OverflowError:
            return 1.0
        return self.base.cdf(y)

    def log_cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return -math.inf
        p = 1.0 / self.sn(n)
        log_y = p * math.log(x)
        lam = self.base.lam
        if isinstance(self.base, Uniform):
            return min(0.0, math.log(lam) + log_y)
        t = lam * math.exp(log_y) if log_y < 700 else math.inf
        if t < 1e-8:
            return math.log(lam) + log_y - t / 2.0
        return math.log(-math.expm1(-t))

    def quantile(self, n: int, q: float) -> float:
        _check_unit(q)
        return self.base.inverse_unit(q) ** self.sn(n) * self.lam_factor(n)

    def log_quantile(self, n: int, log_q: float) -> float:
        """Quantile at ``exp(log_q)``; exact for probabilities far below 1e-308.

        The ``lam != 1`` case goes through the rescaling ``Z = Z1 / lam`` so
        every sampled weight equals the ``lam = 1`` weight times ``lam**-s_n``.
        """
        q = math.exp(log_q)
        s = self.sn(n)
        log_z1 = self.base.log_inverse_unit(q, log_q)
        return math.exp(s * log_z1) * self.lam_factor(n)

    def lam_factor(self, n: int) -> float:
        """``lam**(-s_n)``: weight multiplier relative to the ``lam = 1`` model."""
        return self.base.lam ** (-self.sn(n))

    def density(self, n: int, x: float) -> float:
        if x <= 0:
            return 0.0
        p = 1.0 / self.sn(n)
        return p * x ** (p - 1.0) * self.base.density(x ** p)


@dataclass(frozen=True)
class LogFrechet:
    """``X = exp(-(E/rho)**(1/alpha))`` with ``E`` standard exponential."""

    rho: float = 1.0
    alpha: float = 3.0

    family = "logfrechet"

    def __post_init__(self):
        _positive("rho", self.rho)
        _positive("alpha", self.alpha)

    def sn(self, n: int) -> float:
        return math.log(n) ** (-1.0 + 1.0 / self.alpha) / (self.alpha * self.rho ** (1.0 / self.alpha))

    def cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return 0.0
        if x >= 1:
            return 1.0
        return math.exp(self.log_cdf(n, x))

    def log_cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return -math.inf
        if x >= 1:
            return 0.0
        return -self.rho * (-math.log(x)) ** self.alpha

    def quantile(self, n: int, q: float) -> float:
        _check_unit(q)
        return math.exp(-((-math.log(q) / self.rho) ** (1.0 / self.alpha)))

    def log_quantile(self, n: int, log_q: float) -> float:
        return math.exp(-((-log_q / self.rho) ** (1.0 / self.alpha)))

    def density(self, n: int, x: float) -> float:
        if not 0 < x < 1:
            return 0.0
        t = -math.log(x)
        return self.rho * self.alpha / x * t ** (self.alpha - 1.0) * math.exp(-self.rho * t ** self.alpha)


@dataclass(frozen=True)
class NegPowerExp:
    """``X = E**(-gamma)``; ``F(x) = exp(-x**(-1/gamma))``."""

    gamma: float = 1.0

    family = "negpowexp"

    def __post_init__(self):
        _positive("gamma", self.gamma)

    def sn(self, n: int) -> float:
        return self.gamma / math.log(n)

    def cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return 1.0
        return math.exp(self.log_cdf(n, x))

    def log_cdf(self, n: int, x: float) -> float:
        if x <= 0:
            return -math.inf
        return -(x ** (-1.0 / self.gamma))

    def quantile(self, n: int, q: float) -> float:
        _check_unit(q)
        return (-math.log(q)) ** (-self.gamma)

    def log_quantile(self, n: int, log_q: float) -> float:
        q = math.exp(log_q)
        if q >= 1.0:
            return math.inf
        # -log q, computed without cancellation as q -> 1
        t = -log_q if q < 0.5 else -math.log1p(q - 1.0)
        return t ** (-self.gamma)

    def density(self, n: int, x: float) -> float:
        if x <= 0:
            return 0.0
        g = self.gamma
        return (1.0 / g) * x ** (-1.0 / g - 1.0) * math.exp(-(x ** (-1.0 / g)))


WeightModel = Union[Powered, LogFrechet, NegPowerExp]


# ---------------------------------------------------------------------------
# functional interface


def model_cdf(model: WeightModel, n: int, x: float) -> float:
    """``F_n(x)``."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    return model.cdf(n, x)


def model_quantile(model: WeightModel, n: int, q: float) -> float:
    """Inverse of :func:`model_cdf` on ``(0, 1)``."""
    return model.quantile(n, q)


def sample_weight(model: WeightModel, n: int, unit: float) -> float:
    """Inverse-CDF sample driven by the uniform variate ``unit``."""
    return model.quantile(n, unit)


def scale_un(model: WeightModel, n: int) -> float:
    """Closed-form solution ``u_n`` of ``n F_n(u_n) = 1``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if isinstance(model, Powered):
        s = model.sn(n)
        if isinstance(model.base, Uniform):
            return (model.base.lam * n) ** (-s)
        return (-math.log1p(-1.0 / n) / model.base.lam) ** s
    if isinstance(model, LogFrechet):
        return math.exp(-((math.log(n) / model.rho) ** (1.0 / model.alpha)))
    if isinstance(model, NegPowerExp):
        return math.log(n) ** (-model.gamma)
    raise TypeError(f"unknown model {model!r}")


def scale_un_bisect(model: WeightModel, n: int, rtol: float = 1e-12) -> float:
    """Root of ``n F_n(u) = 1`` by bisection on ``log u`` (cross-check path)."""
    target = -math.log(n)
    lo, hi = -1.0, 1.0
    while model.log_cdf(n, math.exp(lo)) > target:
        lo *= 2.0
    while model.log_cdf(n, math.exp(hi)) < target:
        hi *= 2.0
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if model.log_cdf(n, math.exp(mid)) < target:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def effective_sn(model: WeightModel, n: int) -> float:
    """Effective disorder parameter ``s_n`` of the model at size ``n``."""
    return model.sn(n)


@dataclass(frozen=True)
class Regime:
    """Universality class of a model: ``very_small``, ``intermediate``,
    ``constant`` or ``other``.  ``param`` holds gamma (very small) or s
    (constant)."""

    kind: str
    param: Optional[float] = None

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


def classify_regime(model: WeightModel) -> Regime:
    """Symbolic classification from the family and ``s_n`` rule.

    ``very_small(gamma)`` iff ``s_n log n -> gamma``; ``intermediate`` iff
    ``s_n log n -> inf`` and ``s_n**2 log n -> 0``; ``constant(s)`` for
    constant rules.
    """
    if isinstance(model, NegPowerExp):
        return Regime("very_small", model.gamma)
    if isinstance(model, LogFrechet):
        # s_n^2 log n ~ (log n)^(-1 + 2/alpha)
        return Regime("intermediate") if model.alpha > 2 else Regime("other")
    rule = model.rule
    if isinstance(rule, Constant):
        return Regime("constant", rule.s)
    if isinstance(rule, GammaOverLog):
        return Regime("very_small", rule.gamma)
    if isinstance(rule, PowerOfLog):
        # s_n log n = c (log n)^(1-a) -> inf;  s_n^2 log n = c^2 (log n)^(1-2a)
        return Regime("intermediate") if rule.a > 0.5 else Regime("other")
    if isinstance(rule, Table):
        if rule.regime == "very_small" and rule.gamma is not None:
            return Regime("very_small", rule.gamma)
        if rule.regime == "constant" and rule.s is not None:
            return Regime("constant", rule.s)
        if rule.regime == "intermediate":
            return Regime("intermediate")
        return Regime("other")
    raise TypeError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class RegimeParams:
    n: int
    s_n: float
    p_n: float
    u_n: float
    lam: float
    regime: Regime


def regime_params(model: WeightModel, n: int) -> RegimeParams:
    if n < 3:
        raise ValueError("n must be at least 3")
    s = effective_sn(model, n)
    lam = model.base.lam if isinstance(model, Powered) else 1.0
    return RegimeParams(n, s, 1.0 / s, scale_un(model, n), lam, classify_regime(model))


# ---------------------------------------------------------------------------
# model grammar
#
#   powered:<uniform|exp>[:lambda=<x>]:rule=<rule>
#   logfrechet:rho=<x>:alpha=<x>
#   negpowexp:gamma=<x>
#
#   <rule> := const(s=<x>) | powlog(c=<x>,a=<x>) | gammalog(gamma=<x>)
#           | table(<n>=<s>,...[,regime=<name>][,gamma=<x>][,s=<x>])

_RULE_RE = re.compile(r"^(\w+)\((.*)\)$")


def _kv(parts, context):
    out = {}
    for part in parts:
        if not part:
            continue
        if "=" not in part:
            raise ModelSpecError(f"expected key=value in {context!r}, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _num(d, key, context, default=None):
    if key not in d:
        if default is not None:
            return default
        raise ModelSpecError(f"missing {key} in {context!r}")
    try:
        return float(d.pop(key))
    except ValueError:
        raise ModelSpecError(f"{key} in {context!r} is not a number") from None


def _parse_rule(text: str) -> SnRule:
    m = _RULE_RE.match(text.strip())
    if not m:
        raise ModelSpecError(f"cannot parse s_n rule {text!r}")
    name, body = m.group(1), m.group(2)
    args = _kv(body.split(","), text)
    if name == "const":
        rule = Constant(_num(args, "s", text))
    elif name == "powlog":
        rule = PowerOfLog(_num(args, "c", text), _num(args, "a", text))
    elif name == "gammalog":
        rule = GammaOverLog(_num(args, "gamma", text))
    elif name == "table":
        regime = args.pop("regime", None)
        gamma = float(args.pop("gamma")) if "gamma" in args else None
        s = float(args.pop("s")) if "s" in args else None
        try:
            values = {int(k): float(v) for k, v in args.items()}
        except ValueError:
            raise ModelSpecError(f"bad table entries in {text!r}") from None
        return Table(tuple(values.items()), regime, gamma, s)
    else:
        raise ModelSpecError(f"unknown s_n rule {name!r}")
    if args:
        raise ModelSpecError(f"unexpected arguments {sorted(args)} in {text!r}")
    return rule


def parse_model(text: str) -> WeightModel:
    """Parse a model string such as ``logfrechet:rho=1:alpha=3``."""
    parts = text.strip().split(":")
    family = parts[0].lower()
    if family == "powered":
        if len(parts) < 2:
            raise ModelSpecError(f"missing base distribution in {text!r}")
        base_name = parts[1].lower()
        args = _kv(parts[2:], text)
        lam = _num(args, "lambda", text, default=1.0)
        if "rule" not in args:
            raise ModelSpecError(f"missing rule= in {text!r}")
        rule = _parse_rule(args.pop("rule"))
        if args:
            raise ModelSpecError(f"unexpected fields {sorted(args)} in {text!r}")
        if base_name in ("uniform", "unif", "u"):
            base = Uniform(lam)
        elif base_name in ("exp", "exponential"):
            base = Exponential(lam)
        else:
            raise ModelSpecError(f"unknown base distribution {base_name!r}")
        return Powered(base, rule)
    args = _kv(parts[1:], text)
    if family == "logfrechet":
        model = LogFrechet(_num(args, "rho", text), _num(args, "alpha", text))
    elif family == "negpowexp":
        model = NegPowerExp(_num(args, "gamma", text))
    else:
        raise ModelSpecError(f"unknown model family {family!r}")
    if args:
        raise ModelSpecError(f"unexpected fields {sorted(args)} in {text!r}")
    return model


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))


def format_model(model: WeightModel) -> str:
    """Inverse of :func:`parse_model`."""
    if isinstance(model, LogFrechet):
        return f"logfrechet:rho={_fmt(model.rho)}:alpha={_fmt(model.alpha)}"
    if isinstance(model, NegPowerExp):
        return f"negpowexp:gamma={_fmt(model.gamma)}"
    rule = model.rule
    if isinstance(rule, Constant):
        r = f"const(s={_fmt(rule.s)})"
    elif isinstance(rule, PowerOfLog):
        r = f"powlog(c={_fmt(rule.c)},a={_fmt(rule.a)})"
    elif isinstance(rule, GammaOverLog):
        r = f"gammalog(gamma={_fmt(rule.gamma)})"
    else:
        items = [f"{k}={_fmt(v)}" for k, v in rule.values]
        if rule.regime:
            items.append(f"regime={rule.regime}")
        if rule.gamma is not None:
            items.append(f"gamma={_fmt(rule.gamma)}")
        if rule.s is not None:
            items.append(f"s={_fmt(rule.s)}")
        r = "table(" + ",".join(items) + ")"
    return f"powered:{model.base.name}:lambda={_fmt(model.base.lam)}:rule={r}"
