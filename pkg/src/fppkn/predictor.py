"""Closed-form constants and first/second-order predictions for W_n and H_n.

The functions here are cheap and pure.  :func:`predict` maps a weight model
and a graph size to the bands and limit laws expected for the optimal weight
``W_n`` and the hopcount ``H_n``; :func:`moment_diagnostics` evaluates the
first and second moment quantities behind those bands.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .census import path_count_exact
from .convolution import conv_best, log_stirling_a
from .weights import (
    LogFrechet,
    NegPowerExp,
    Powered,
    Regime,
    classify_regime,
    scale_un,
)

__all__ = [
    "TIE_TOL",
    "eta",
    "eta_k",
    "g_gamma",
    "minimizer_k",
    "gamma_threshold",
    "theta",
    "stirling_a",
    "log_stirling_a",
    "psi",
    "phi",
    "GumbelSpec",
    "LogZLaw",
    "Prediction",
    "predict",
    "gumbel_statistic",
    "limit_cdf",
    "limit_sample",
    "MomentRecord",
    "moment_diagnostics",
]

TIE_TOL = 1e-12


def eta(x: float) -> float:
    """``min(ceil(x), exp(x/floor(x) - 1) floor(x))`` for ``x >= 1``."""
    if not x >= 1:
        raise ValueError(f"eta is defined for x >= 1, got {x}")
    lo = math.floor(x)
    return min(float(math.ceil(x)), math.exp(x / lo - 1.0) * lo)


def eta_k(x: float) -> int:
    """Path length realising :func:`eta`: ``ceil(x)`` or ``floor(x)``."""
    lo = math.floor(x)
    if not x >= 1:
        raise ValueError(f"eta is defined for x >= 1, got {x}")
    return math.ceil(x) if math.ceil(x) <= math.exp(x / lo - 1.0) * lo else lo


def g_gamma(gamma: float, x):
    """``x exp(-gamma (1 - 1/x))``; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        if x <= 0:
            raise ValueError("x must be positive")
        return x * math.exp(-gamma * (1.0 - 1.0 / x))
    x = np.asarray(x, dtype=float)
    return x * np.exp(-gamma * (1.0 - 1.0 / x))


def gamma_threshold(k: int) -> float:
    """``gamma_k = k (k+1) log((k+1)/k)``: where ``k`` and ``k+1`` tie."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return k * (k + 1) * math.log1p(1.0 / k)


def _tie_index(gamma):
    for j in (math.floor(gamma) - 1, math.floor(gamma), math.floor(gamma) + 1):
        if j >= 1 and abs(gamma - gamma_threshold(j)) <= TIE_TOL:
            return j
    return None


def minimizer_k(gamma: float):
    """``(k, g_gamma(k), tie)`` with ``k`` the integer minimiser of ``g_gamma``.

    On a tie (``gamma`` within ``TIE_TOL`` of some ``gamma_j``) both ``j`` and
    ``j + 1`` minimise and the smaller one is returned.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    j = _tie_index(gamma)
    if j is not None:
        return j, g_gamma(gamma, j), True
    cands = sorted({max(math.floor(gamma), 1), max(math.ceil(gamma), 1)})
    vals = [g_gamma(gamma, c) for c in cands]
    i = int(np.argmin(vals))
    return cands[i], vals[i], False


def theta(gamma: float) -> int:
    """Largest ``k`` with ``g_gamma(k) <= 1`` (tolerance ``TIE_TOL``)."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    # {x >= 1 : g(x) <= 1} is an interval starting at 1
    k = 1
    while g_gamma(gamma, k + 1) <= 1.0 + TIE_TOL:
        k += 1
    return k


def stirling_a(k: int) -> float:
    """``a_k = (2 pi)**(k/2) / sqrt(2 pi k)``, via logs (``inf`` on overflow)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k <= 100:
        return (2 * math.pi) ** (k / 2) / math.sqrt(2 * math.pi * k)
    la = log_stirling_a(k)
    return math.exp(la) if la < 709 else math.inf


def psi(q: float) -> float:
    """``(1/q - 1) log(1/(1-q))`` extended by ``psi(0) = 1``, ``psi(1) = 0``."""
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    if q == 0:
        return 1.0
    if q == 1:
        return 0.0
    return (1.0 / q - 1.0) * -math.log1p(-q)


def phi(x: float) -> float:
    """``-x + log x``; unique maximum ``-1`` at ``x = 1``."""
    if x <= 0:
        raise ValueError("x must be positive")
    return -x + math.log(x)


# ---------------------------------------------------------------------------
# limit laws


def limit_cdf(t, a_k: float):
    """CDF ``1 - exp(-a_k e**t)`` of ``-Lambda - log a_k`` (``Lambda`` Gumbel)."""
    return -np.expm1(-a_k * np.exp(t))


def limit_sample(u, a_k: float):
    """Inverse of :func:`limit_cdf` at ``u`` in ``(0, 1)``."""
    u = np.asarray(u, dtype=float)
    return np.log(-np.log1p(-u)) - math.log(a_k)


@dataclass(frozen=True)
class GumbelSpec:
    """Second-order law of ``W_n`` when the hopcount limit is a single ``k``.

    ``T = scale (lam**s_n W_n - g) + shift`` converges to a law with survival
    function ``exp(-a_k e**t)``.
    """

    k: int
    a_k: float
    gamma: float
    n: int
    s_n: float
    lam: float
    g: float
    kind: str = "gumbel"

    @property
    def scale(self) -> float:
        return self.k / (self.g * self.s_n)

    @property
    def shift(self) -> float:
        s = self.s_n
        return (self.k - 1) / s * (s * math.log(self.n) - self.gamma - s * math.log(s) / 2.0)

    def statistic(self, w):
        return self.scale * (self.lam ** self.s_n * np.asarray(w) - self.g) + self.shift

    def cdf(self, t):
        return limit_cdf(t, self.a_k)


@dataclass(frozen=True)
class LogZLaw:
    """``(W_n - 1)/s_n`` converges to ``log Z``, ``Z`` the base variable."""

    base: str
    lam: float
    kind: str = "log_z"


@dataclass
class Prediction:
    """Predicted bands for ``W_n`` and ``H_n`` at one ``(model, n)``.

    Missing entries are ``None``.  ``H_tie`` holds the two-point support when
    two hop counts share the limit; ``ingredients`` records every quantity the
    bands were built from.
    """

    regime: Regime
    n: int
    u_n: float
    s_n: float
    W_lower: Optional[float] = None
    W_upper: Optional[float] = None
    W_center: Optional[float] = None
    H_value: Optional[int] = None
    H_tie: Optional[tuple] = None
    H_center: Optional[float] = None
    H_band: Optional[tuple] = None
    limit_law: Optional[Union[GumbelSpec, LogZLaw]] = None
    ingredients: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = str(self.regime)
        if self.limit_law is not None:
            d["limit_law"] = asdict(self.limit_law)
        return d


def _intermediate_ingredients(s, n, beta):
    x = s * math.log(n)
    return {
        "s_n_log_n": x,
        "k_minus": math.floor(x),
        "k_plus": math.ceil(x),
        "beta": beta,
    }


def _hop_band(x, beta):
    return (x / (1.0 + beta), x / (1.0 - beta))


def predict(model, n: int, beta: float = 0.25) -> Prediction:
    """Predicted bands for ``W_n`` and ``H_n``.

    ``beta`` sets the relative hopcount band ``(x/(1+beta), x/(1-beta))``
    around ``x = s_n log n``; the band is asymptotically valid for any
    ``beta`` with ``s_n log(1/s_n) / beta**2 < 1/2``.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if n < 3:
        raise ValueError("n must be at least 3")
    regime = classify_regime(model)
    s = model.sn(n)
    u = scale_un(model, n)
    pred = Prediction(regime, n, u, s)
    ing = pred.ingredients
    ing.update(u_n=u, s_n=s)
    logn = math.log(n)
    lam = model.base.lam if isinstance(model, Powered) else 1.0

    if regime.kind == "very_small":
        gamma = regime.param
        ing["gamma"] = gamma
        if isinstance(model, NegPowerExp):
            # hop count settles on floor/ceil of gamma + 1; W_n/u_n has a
            # constant limit without a closed form
            pred.H_band = (float(math.floor(gamma + 1)), float(math.ceil(gamma + 1)))
            return pred
        k, g, tie = minimizer_k(gamma)
        factor = lam ** (-s)
        ing.update(k_gamma=k, g_min=g, tie=tie, theta=theta(gamma), lam_factor=factor)
        pred.W_center = g * factor
        pred.W_lower = g * factor
        pred.W_upper = factor
        pred.H_band = (1.0, float(theta(gamma)))
        if tie:
            pred.H_tie = (k, k + 1)
        else:
            pred.H_value = k
        if gamma < gamma_threshold(1) - TIE_TOL:
            pred.limit_law = LogZLaw(model.base.name, lam)
        elif not tie:
            pred.limit_law = GumbelSpec(k, stirling_a(k), gamma, n, s, lam, g)
        return pred

    if regime.kind == "intermediate":
        ing.update(_intermediate_ingredients(s, n, beta))
        x = ing["s_n_log_n"]
        pred.W_center = math.e * u * x
        pred.H_center = x
        pred.H_band = _hop_band(x, beta)
        if isinstance(model, LogFrechet):
            a = model.alpha
            ll = math.log(logn)
            rate_up = max(logn ** (-1 + 2 / a) * ll, logn ** (-1 / a) * ll ** 3)
            rate_lo = max(logn ** (-1 + 1 / a) * ll, logn ** (-1 / a) * ll ** 2)
            eps_up, eps_lo = 2 * rate_up, 2 * rate_lo
            ing.update(eps_upper=eps_up, eps_lower=eps_lo)
            pred.W_lower = max(0.0, 1 - eps_lo) * math.e * ing["k_minus"] * u
            pred.W_upper = (1 + eps_up) * math.e * ing["k_plus"] * u
            return pred
        eps = math.sqrt(s * math.log(logn))
        ing["eps_n"] = eps
        pred.W_lower = max(0.0, 1 - eps) * math.e * ing["k_minus"] * u
        # eta needs s_n log n >= 1; below that only the ceil bound applies
        pred.W_upper = math.e * (eta(x) if x >= 1 else math.ceil(x)) * u
        return pred

    if regime.kind == "constant":
        sc = regime.param
        const = 1.0 / (sc * math.gamma(1.0 + 1.0 / sc) ** sc)
        pred.W_center = (lam * n) ** (-sc) * sc * logn * const
        pred.H_center = sc * logn
        # central limit theorem with variance s**2 log n
        sd = sc * math.sqrt(logn)
        pred.H_band = (sc * logn - 2 * sd, sc * logn + 2 * sd)
        ing.update(limit_constant=const)
        return pred

    return pred


def gumbel_statistic(w, gamma: float, k: int, n: int, s_n: float, lam: float = 1.0):
    """Transformed weight ``T`` whose limit has CDF ``1 - exp(-a_k e**t)``."""
    if gamma <= gamma_threshold(1) + TIE_TOL:
        raise ValueError("the Gumbel limit needs gamma > 2 log 2")
    kk, g, tie = minimizer_k(gamma)
    if tie:
        raise ValueError(f"gamma = {gamma} is a tie point; two hop counts share the limit")
    if k != kk:
        raise ValueError(f"k must be the minimiser k(gamma) = {kk}")
    return GumbelSpec(k, stirling_a(k), gamma, n, s_n, lam, g).statistic(w)


# ---------------------------------------------------------------------------
# moment diagnostics


def _logsumexp(values):
    values = [v for v in values if v > -math.inf]
    if not values:
        return -math.inf
    top = max(values)
    return top + math.log(sum(math.exp(v - top) for v in values))


@dataclass(frozen=True)
class MomentRecord:
    """Log-scale first/second moment quantities; see :func:`moment_diagnostics`."""

    log_lower_sum: float
    log_mean_Nk: float
    var_ratio_sum: float
    terms_used: int

    @property
    def lower_sum(self) -> float:
        return math.exp(self.log_lower_sum) if self.log_lower_sum > -math.inf else 0.0

    @property
    def mean_Nk(self) -> float:
        return math.exp(self.log_mean_Nk) if self.log_mean_Nk < 709 else math.inf


def moment_diagnostics(model, n: int, k: int, b: float, d: float,
                       reps: int = 20_000, seed: int = 0, rel_cut: float = 1e-30) -> MomentRecord:
    """First and second moment checks at path length ``k``.

    ``lower_sum = sum_j n**(j-1) F^{*j}(d)`` (expected number of paths of any
    length lighter than ``d``), truncated once terms fall below ``rel_cut``
    times the running sum past the peak;
    ``mean_Nk = |S_12(k)| F^{*k}(b)``;
    ``var_ratio_sum = sum_{l=1}^{k-2} (l+1) n**-l F^{*(k-l)}(b) / F^{*k}(b)``.
    Convolutions use the closed form where exact, else conditional MC.
    """
    if not 1 <= k <= n - 1:
        raise ValueError("k must lie in [1, n-1]")

    def logF(j, x):
        return conv_best(model, n, j, x, reps=reps, seed=seed + j).log_value

    logn = math.log(n)
    terms = []
    prev = -math.inf
    for j in range(1, n):
        t = (j - 1) * logn + logF(j, d)
        terms.append(t)
        total = _logsumexp(terms)
        if t < prev and t < total + math.log(rel_cut):
            break
        prev = t
    log_fk = logF(k, b)
    log_mean = math.log(path_count_exact(n, k)) + log_fk
    ratio = 0.0
    for l in range(1, k - 1):
        ratio += (l + 1) * math.exp(-l * logn + logF(k - l, b) - log_fk)
    return MomentRecord(_logsumexp(terms), log_mean, ratio, len(terms))
