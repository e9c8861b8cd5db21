"""Lower tail of the k-fold convolution ``F^{*k}(x) = P(X_1 + ... + X_k <= x)``.

Tail probabilities of interest are far below double-precision underflow, so
every estimator and bound carries ``log`` probabilities internally.

Estimators
    :func:`conv_closed_uniform` (exact, uniform base), :func:`conv_conditional_mc`
    (unbiased, any model), :func:`conv_grid` (bracketed numerical convolution).
Bounds
    :func:`bounds_generic`, :func:`bounds_powered`, :func:`bounds_logfrechet`,
    and the small-``s`` asymptotic :func:`asymptotic_small_s`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special

from .weights import Exponential, LogFrechet, NegPowerExp, Powered, Uniform

__all__ = [
    "TailEstimate",
    "BoundPair",
    "GridConvolution",
    "ConvolutionDomainError",
    "conv_closed_uniform",
    "conv_conditional_mc",
    "conv_grid",
    "log_grid",
    "conv_best",
    "simplex_density_max",
    "log_simplex_density_max",
    "bounds_generic",
    "bounds_powered",
    "bounds_logfrechet",
    "logfrechet_xhat",
    "asymptotic_small_s",
    "asymptotic_lemma44",
    "log_stirling_a",
    "log_quantiles",
    "log_cdfs",
    "log_density",
]


class ConvolutionDomainError(ValueError):
    """Query outside the domain where a formula or bound is valid."""


def _exp(x):
    return math.exp(x) if x > -math.inf else 0.0


@dataclass(frozen=True)
class TailEstimate:
    """Estimate of ``F^{*k}(x)`` stored as ``log_value``.

    ``rel_std_error`` is the standard error divided by the estimate; it is
    present only for Monte Carlo estimates.
    """

    log_value: float
    method: str
    rel_std_error: Optional[float] = None

    @property
    def value(self) -> float:
        return _exp(self.log_value)

    @property
    def std_error(self) -> Optional[float]:
        if self.rel_std_error is None:
            return None
        return self.value * self.rel_std_error

    @property
    def log_scale(self) -> bool:
        return True


@dataclass(frozen=True)
class BoundPair:
    """``log_lower <= log F^{*k}(x) <= log_upper``.

    ``log_upper`` is ``None`` when no upper bound is available, with the
    reason in ``flag``.  ``xhat`` is the validity threshold, if any.
    """

    log_lower: float
    log_upper: Optional[float]
    xhat: Optional[float] = None
    flag: str = ""

    @property
    def lower(self) -> float:
        return _exp(self.log_lower)

    @property
    def upper(self) -> Optional[float]:
        return None if self.log_upper is None else _exp(self.log_upper)

    def contains(self, log_value: float, slack: float = 0.0) -> bool:
        """``lower - slack <= value <= upper + slack`` on the log scale."""
        if log_value < self.log_lower - slack:
            return False
        return self.log_upper is None or log_value <= self.log_upper + slack


# ---------------------------------------------------------------------------
# helpers


def log_stirling_a(k: int) -> float:
    """``log a_k`` with ``a_k = (2 pi)**(k/2) / sqrt(2 pi k)``."""
    return 0.5 * k * math.log(2 * math.pi) - 0.5 * math.log(2 * math.pi * k)


def _powered_p(model: Powered, n: int) -> float:
    return 1.0 / model.sn(n)


def log_quantiles(model, n: int, log_q: np.ndarray) -> np.ndarray:
    """Vectorised model quantile at ``exp(log_q)``, accurate for tiny ``q``."""
    log_q = np.asarray(log_q, dtype=float)
    if isinstance(model, Powered):
        s = model.sn(n)
        if isinstance(model.base, Uniform):
            log_z1 = log_q
        else:
            q = np.exp(log_q)
            small = q < 1e-8
            log_z1 = np.empty_like(log_q)
            # -log(1-q) = q (1 + q/2 + ...)
            log_z1[small] = log_q[small] + q[small] / 2.0
            log_z1[~small] = np.log(-np.log1p(-q[~small]))
        return np.exp(s * log_z1) * model.lam_factor(n)
    if isinstance(model, LogFrechet):
        return np.exp(-((-log_q / model.rho) ** (1.0 / model.alpha)))
    if isinstance(model, NegPowerExp):
        return (-log_q) ** (-model.gamma)
    raise TypeError(f"unknown model {model!r}")


def log_density(model, n: int, y: float) -> float:
    """``log f(y)`` for ``y`` in the support."""
    if y <= 0:
        return -math.inf
    if isinstance(model, Powered):
        p = _powered_p(model, n)
        z = y ** p
        base = model.base
        if isinstance(base, Uniform):
            if z >= 1.0 / base.lam:
                return -math.inf
            log_g = math.log(base.lam)
        else:
            log_g = math.log(base.lam) - base.lam * z
        return math.log(p) + (p - 1.0) * math.log(y) + log_g
    if isinstance(model, LogFrechet):
        if y >= 1:
            return -math.inf
        t = -math.log(y)
        a, r = model.alpha, model.rho
        return math.log(r * a) - math.log(y) + (a - 1.0) * math.log(t) - r * t ** a
    if isinstance(model, NegPowerExp):
        g = model.gamma
        return -math.log(g) - (1.0 / g + 1.0) * math.log(y) - y ** (-1.0 / g)
    raise TypeError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# estimators


def conv_closed_uniform(p: float, k: int, x: float) -> TailEstimate:
    """Exact ``F^{*k}(x)`` for ``X = U**(1/p)``, ``U`` uniform on (0, 1).

    ``x**(k p) Gamma(p+1)**k / Gamma(k p + 1)`` holds without error for
    ``0 <= x <= 1``.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if p <= 0:
        raise ValueError("p must be positive")
    if not 0 <= x <= 1:
        raise ConvolutionDomainError(f"closed form needs 0 <= x <= 1, got {x}")
    if x == 0:
        return TailEstimate(-math.inf, "closed_form")
    log_v = k * p * math.log(x) + k * special.gammaln(p + 1) - special.gammaln(k * p + 1)
    return TailEstimate(float(min(log_v, 0.0)), "closed_form")


def log_cdfs(model, n: int, x) -> np.ndarray:
    """Vectorised ``log F(x)``."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    xp = x[pos]
    if isinstance(model, Powered):
        p = _powered_p(model, n)
        lam = model.base.lam
        log_y = p * np.log(xp)
        if isinstance(model.base, Uniform):
            vals = np.minimum(0.0, math.log(lam) + log_y)
        else:
            t = lam * np.exp(np.minimum(log_y, 700.0))
            with np.errstate(divide="ignore"):
                vals = np.where(t < 1e-8, math.log(lam) + log_y - t / 2.0, np.log(-np.expm1(-t)))
    elif isinstance(model, LogFrechet):
        with np.errstate(invalid="ignore"):
            vals = np.where(xp < 1, -model.rho * np.abs(np.log(xp)) ** model.alpha, 0.0)
    elif isinstance(model, NegPowerExp):
        vals = -(xp ** (-1.0 / model.gamma))
    else:
        raise TypeError(f"unknown model {model!r}")
    out[pos] = vals
    return out


def _log_diff(log_hi, log_lo):
    """``log(exp(log_hi) - exp(log_lo))`` for ``log_lo <= log_hi``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = log_hi + np.log(-np.expm1(np.minimum(log_lo - log_hi, 0.0)))
    return np.where(np.isneginf(log_hi), -np.inf, out)


def _ordered_weights(model, n, k, x, u):
    """Log-weights of the minimum-first decomposition for one batch.

    ``P(all m >= lo, sum <= r) = m * int_lo^{r/m} f(y)
    P(remaining m-1 >= y, sum <= r - y) dy``: the minimum is drawn from
    ``f`` restricted to ``[lo, r/m]`` and contributes the factor
    ``m (F(r/m) - F(lo))``.
    """
    size = u.shape[0]
    r = np.full(size, float(x))
    lo = np.zeros(size)
    logw = np.zeros(size)
    log_flo = np.full(size, -np.inf)
    for i in range(k - 1):
        m = k - i
        hi = r / m
        log_fhi = log_cdfs(model, n, hi)
        logw += math.log(m) + _log_diff(log_fhi, log_flo)
        d = np.exp(np.minimum(log_flo - log_fhi, 0.0))
        with np.errstate(divide="ignore"):
            log_q = log_fhi + np.log(d + u[:, i] * (1.0 - d))
        y = np.clip(log_quantiles(model, n, log_q), lo, hi)
        r = r - y
        lo = y
        log_flo = log_cdfs(model, n, lo)
    logw += _log_diff(log_cdfs(model, n, r), log_flo)
    return logw


def conv_conditional_mc(model, n: int, k: int, x: float, reps: int = 100_000,
                        seed: int = 0, scheme: str = "ordered",
                        chunk: int = 1 << 16) -> TailEstimate:
    """Conditional Monte Carlo estimate of ``F^{*k}(x)``; deterministic in ``seed``.

    ``scheme="plain"`` uses ``F(x)**k * P(Y_1 + ... + Y_k <= x)`` with ``Y_i``
    distributed as ``X`` given ``X <= x``, estimating the second factor by
    counting hits.  ``scheme="ordered"`` (default) conditions further on the
    running minimum, see :func:`_ordered_weights`; every draw lands in the
    event, which keeps the relative error bounded for steep laws where the
    plain hit rate underflows.  Both are unbiased and exact for ``k = 1``.
    """
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if scheme not in ("ordered", "plain"):
        raise ValueError(f"unknown scheme {scheme!r}")
    log_f = model.log_cdf(n, x)
    if log_f == -math.inf:
        raise ConvolutionDomainError(f"F({x}) = 0: conditioning event is empty")
    if k == 1:
        return TailEstimate(log_f, "conditional_mc", 0.0)
    rng = np.random.default_rng(seed)
    parts = []
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        u = rng.random((m, k))
        # random() may return 0; keep variates in the open interval
        u = np.where(u == 0.0, 2.0**-54, u)
        if scheme == "plain":
            y = log_quantiles(model, n, np.log(u) + log_f)
            hit = y.sum(axis=1) <= x
            parts.append(np.where(hit, k * log_f, -np.inf))
        else:
            parts.append(_ordered_weights(model, n, k, x, u))
        done += m
    logw = np.concatenate(parts)
    top = float(np.max(logw))
    if top == -math.inf:
        return TailEstimate(-math.inf, "conditional_mc", math.inf)
    w = np.exp(logw - top)
    mean = float(w.mean())
    rel = float(w.std(ddof=1) / mean / math.sqrt(reps))
    return TailEstimate(top + math.log(mean), "conditional_mc", rel)


def log_grid(x_max: float, size: int = 2000, x_min: Optional[float] = None) -> np.ndarray:
    """``0`` followed by ``size`` log-spaced points up to ``x_max``."""
    if x_min is None:
        x_min = x_max * 1e-6
    return np.concatenate(([0.0], np.geomspace(x_min, x_max, size)))


@dataclass(frozen=True)
class GridConvolution:
    """Bracketed ``F^{*k}`` on a grid, in logs: ``log_lower <= log F^{*k} <= log_upper``."""

    grid: np.ndarray
    log_lower: np.ndarray
    log_upper: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return np.exp(self.log_lower)

    @property
    def upper(self) -> np.ndarray:
        return np.exp(self.log_upper)

    @property
    def log_value(self) -> np.ndarray:
        """Midpoint of the bracket on the log scale."""
        return 0.5 * (self.log_lower + self.log_upper)

    @property
    def log_gap(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            gap = self.log_upper - self.log_lower
        return np.where(np.isneginf(self.log_upper), 0.0, gap)

    def estimates(self) -> list:
        return [TailEstimate(float(v), "grid") for v in self.log_value]


def conv_grid(model, n: int, k: int, grid) -> GridConvolution:
    """Iterated numerical convolution with lower/upper Riemann bracketing.

    With ``dF_j`` the mass of ``(g_{j-1}, g_j]``,
    ``F^{*m}(x) = sum_j int_{cell j} F^{*(m-1)}(x - y) dF(y)`` is bounded below
    by evaluating ``F^{*(m-1)}`` at ``x - g_j`` rounded down to the grid and
    above at ``x - g_{j-1}`` rounded up.  All sums are done in logs, so deep
    tails do not underflow.  Resolution is set by the grid.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("grid must be a one-dimensional array with at least two points")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    if g[0] < 0:
        raise ValueError("grid must start at a nonnegative point")
    log_cdf = log_cdfs(model, n, g)
    if k == 1:
        return GridConvolution(g, log_cdf.copy(), log_cdf.copy())
    left = np.concatenate(([0.0], g[:-1]))
    log_mass = _log_diff(log_cdf, np.concatenate(([-np.inf], log_cdf[:-1])))
    lo, hi = log_cdf.copy(), log_cdf.copy()
    for _ in range(k - 1):
        new_lo = np.full_like(lo, -np.inf)
        new_hi = np.full_like(hi, -np.inf)
        for i, x in enumerate(g):
            # cells (left_j, g_j] meeting [0, x]
            j = np.searchsorted(g, x, side="right")
            if j == 0:
                continue
            # lower: F^{*(m-1)}(x - y) >= value at largest grid point <= x - g_j
            idx = np.searchsorted(g, x - g[:j], side="right") - 1
            vals = np.where(idx >= 0, lo[np.maximum(idx, 0)], -np.inf)
            new_lo[i] = special.logsumexp(log_mass[:j] + vals)
            # upper: value at smallest grid point >= x - left_j
            idx = np.searchsorted(g, x - left[:j], side="left")
            vals = np.where(idx < g.size, hi[np.minimum(idx, g.size - 1)], 0.0)
            new_hi[i] = special.logsumexp(log_mass[:j] + vals)
        lo = np.maximum.accumulate(np.minimum(new_lo, 0.0))
        hi = np.maximum.accumulate(np.minimum(new_hi, 0.0))
    return GridConvolution(g, lo, hi)


def conv_best(model, n: int, k: int, x: float, reps: int = 100_000, seed: int = 0) -> TailEstimate:
    """Closed form where exact (powered uniform base), else conditional MC."""
    if isinstance(model, Powered) and isinstance(model.base, Uniform):
        # X = lam**-s U**s, so F^{*k}(x) is the unit-law value at lam**s x
        scaled = x * model.base.lam ** model.sn(n)
        if scaled <= 1:
            return conv_closed_uniform(_powered_p(model, n), k, scaled)
    return conv_conditional_mc(model, n, k, x, reps=reps, seed=seed)


# ---------------------------------------------------------------------------
# simplex maximum and bounds


def _stationary_and_limit(model, n):
    """``(x_star, x_bar)``: stationary point of ``h = -log f`` and the end of
    the interval ``(0, x_bar)`` on which ``h`` is certified strictly convex."""
    if isinstance(model, Powered):
        p = _powered_p(model, n)
        if p <= 1:
            raise ConvolutionDomainError(
                f"p = 1/s_n = {p:g} <= 1: density is not of the form exp(-h) with h strictly convex"
            )
        base = model.base
        if isinstance(base, Uniform):
            xbar = base.lam ** (-1.0 / p)
            return xbar, xbar
        if isinstance(base, Exponential):
            return ((p - 1.0) / (base.lam * p)) ** (1.0 / p), math.inf
    if isinstance(model, LogFrechet):
        if model.alpha <= 1:
            raise ConvolutionDomainError("convexity needs alpha > 1")
        xs = logfrechet_xhat(model.rho, model.alpha)
        return xs, xs
    if isinstance(model, NegPowerExp):
        g = model.gamma
        return (g + 1.0) ** (-g), g ** (-g)
    raise ConvolutionDomainError(f"no convexity certificate for {model!r}")


def log_simplex_density_max(model, n: int, k: int, x: float) -> float:
    """``log max { prod f(y_i) : y_i >= 0, sum y_i <= x }``.

    With ``h = -log f`` strictly convex on ``(0, x_bar)`` the maximiser is the
    equal split ``y_i = min(x/k, x*)``, ``x*`` the stationary point of ``h``.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    x_star, x_bar = _stationary_and_limit(model, n)
    if x >= x_bar:
        raise ConvolutionDomainError(
            f"x = {x:g} is outside the certified convexity range (0, {x_bar:g})"
        )
    return k * log_density(model, n, min(x / k, x_star))


def simplex_density_max(model, n: int, k: int, x: float) -> float:
    return math.exp(log_simplex_density_max(model, n, k, x))


def bounds_generic(model, n: int, k: int, x: float) -> BoundPair:
    """``F(x/k)**k <= F^{*k}(x) <= x**k / k! * max_simplex prod f``."""
    if x <= 0:
        raise ValueError("x must be positive")
    lower = k * model.log_cdf(n, x / k)
    try:
        log_max = log_simplex_density_max(model, n, k, x)
    except ConvolutionDomainError as exc:
        return BoundPair(lower, None, None, f"upper unavailable: {exc}")
    upper = k * math.log(x) - special.gammaln(k + 1) + log_max
    return BoundPair(lower, float(min(upper, 0.0)), None)


def bounds_powered(base, p: float, k: int, x: float) -> BoundPair:
    """Bounds for ``X = Z**(1/p)``, ``Z ~ base``:
    ``G((x/k)**p)**k <= F^{*k}(x) <= (e d p)**k (x/k)**(k p)``,
    ``d = max G'`` on ``[0, 1 ∧ xhat]``, valid for ``x**p <= 1 ∧ xhat``."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    if x <= 0:
        raise ValueError("x must be positive")
    limit = min(1.0, base.xhat)
    if p * math.log(x) > math.log(limit):
        raise ConvolutionDomainError(f"x**p = {x ** p:g} exceeds 1 ∧ xhat = {limit:g}")
    z = (x / k) ** p
    if isinstance(base, Uniform):
        log_g = math.log(base.lam) + p * math.log(x / k)
    else:
        t = base.lam * z
        log_g = math.log(base.lam) + p * math.log(x / k) - t / 2.0 if t < 1e-8 else math.log(-math.expm1(-t))
    d = base.max_density(limit)
    upper = k * (1.0 + math.log(d * p)) + k * p * math.log(x / k)
    return BoundPair(k * log_g, upper, limit ** (1.0 / p))


def logfrechet_xhat(rho: float, alpha: float) -> float:
    """``exp(-t)`` with ``t`` the root of ``rho alpha t**(alpha-1) - 1 - (alpha-1)/t``."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")

    def bprime(t):
        return rho * alpha * t ** (alpha - 1.0) - 1.0 - (alpha - 1.0) / t

    lo, hi = 1e-12, 1.0
    while bprime(hi) < 0:
        hi *= 2.0
    root = optimize.bisect(bprime, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(-root)


def bounds_logfrechet(rho: float, alpha: float, k: int, x: float) -> BoundPair:
    """``exp(-k rho L**alpha) <= F^{*k}(x) <= (rho alpha e)**k L**(k(alpha-1)) exp(-k rho L**alpha)``
    with ``L = log(k/x)``, valid for ``0 < x < xhat``."""
    xhat = logfrechet_xhat(rho, alpha)
    if not 0 < x < xhat:
        raise ConvolutionDomainError(f"x = {x:g} must lie in (0, xhat) with xhat = {xhat:.15g}")
    L = math.log(k / x)
    lower = -k * rho * L ** alpha
    upper = k * math.log(rho * alpha * math.e) + k * (alpha - 1.0) * math.log(L) + lower
    return BoundPair(lower, upper, xhat)


def asymptotic_small_s(p: float, k: int, b: float, lam: float = 1.0) -> float:
    """``log`` of ``(b'/k)**(k p) p**((k-1)/2) a_k`` with ``b' = lam**(1/p) b``.

    The leading term assumes ``G'(0+) = 1``; a base with ``G'(0+) = lam`` is
    reduced to it by rescaling ``Z -> lam Z``, which multiplies every weight
    by ``lam**(1/p)``.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    b_eff = b * lam ** (1.0 / p)
    return k * p * math.log(b_eff / k) + 0.5 * (k - 1) * math.log(p) + log_stirling_a(k)


# name used by the interface description
asymptotic_lemma44 = asymptotic_small_s
