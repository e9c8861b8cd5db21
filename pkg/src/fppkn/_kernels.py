"""Compiled inner loops: counter-based edge variates and Dijkstra on K_n.

Edge ``{u, v}`` of an instance with seed ``seed`` gets the uniform variate
``unit(seed, min(u, v), max(u, v))`` (1-based labels), a pure function of its
arguments; the weight is the model quantile at that variate.  Model laws are
passed to the kernels as ``(code, a, b, c)``:

====  ==================  ==========================================
code  family              weight
====  ==================  ==========================================
0     powered uniform     ``unit**a * b``           (a = s_n, b = lam**-s_n)
1     powered exp         ``(-log1p(-unit))**a * b``
2     log-Frechet         ``exp(-(-log(unit)/a)**(1/b))``  (a = rho, b = alpha)
3     E**-gamma           ``(-log(unit))**(-a)``
====  ==================  ==========================================
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

POWERED_UNIFORM = 0
POWERED_EXP = 1
LOG_FRECHET = 2
NEG_POWER_EXP = 3


@nb.njit(cache=True, inline="always")
def splitmix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def edge_unit(seed, u, v):
    """Open-interval uniform variate for the canonical edge ``u < v``."""
    key = (np.uint64(u) << np.uint64(32)) | np.uint64(v)
    h = splitmix64(seed ^ splitmix64(key))
    return (np.float64(h >> np.uint64(11)) + 0.5) * _INV53


@nb.njit(cache=True)
def mix_seed(master, index):
    return splitmix64(np.uint64(master) ^ splitmix64(np.uint64(index) + _GOLDEN))


@nb.njit(cache=True, inline="always")
def quantile(code, a, b, unit):
    if code == 0:
        return unit ** a * b
    if code == 1:
        return (-math.log1p(-unit)) ** a * b
    if code == 2:
        return math.exp(-((-math.log(unit) / a) ** (1.0 / b)))
    return (-math.log(unit)) ** (-a)


@nb.njit(cache=True, inline="always")
def cdf(code, a, b, x):
    if x <= 0.0:
        return 0.0
    if code == 0:
        return min(1.0, (x / b) ** (1.0 / a))
    if code == 1:
        return -math.expm1(-((x / b) ** (1.0 / a)))
    if code == 2:
        if x >= 1.0:
            return 1.0
        return math.exp(-a * (-math.log(x)) ** b)
    return math.exp(-(x ** (-1.0 / a)))


@nb.njit(cache=True, inline="always")
def weight(seed, u, v, code, a, b):
    if u > v:
        u, v = v, u
    return quantile(code, a, b, edge_unit(seed, u, v))


@nb.njit(cache=True)
def weight_matrix(seed, n, code, a, b):
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            x = weight(seed, i + 1, j + 1, code, a, b)
            w[i, j] = x
            w[j, i] = x
    return w


@nb.njit(cache=True)
def edge_units(seed, us, vs):
    out = np.empty(us.shape[0])
    for i in range(us.shape[0]):
        u, v = us[i], vs[i]
        if u > v:
            u, v = v, u
        out[i] = edge_unit(seed, u, v)
    return out


@nb.njit(cache=True)
def _argmin_open(key, n):
    best = np.inf
    arg = -1
    for i in range(n):
        if key[i] < best:
            best = key[i]
            arg = i
    return arg, best


@nb.njit(cache=True)
def _relax(seed, n, code, a, b, u, du, dist, key, done, pred, other, mu, meet):
    """Relax all edges out of the freshly settled vertex ``u`` (0-based).

    Edges with ``du + w >= mu`` cannot lie on a path lighter than the
    incumbent and are skipped after a cheap test on the uniform variate.
    """
    slack = mu - du
    if slack <= 0.0:
        return mu, meet
    tau = cdf(code, a, b, slack)
    tau = tau * (1.0 + 1e-12) + 1e-300
    for v in range(n):
        if done[v]:
            continue
        if u < v:
            unit = edge_unit(seed, u + 1, v + 1)
        else:
            unit = edge_unit(seed, v + 1, u + 1)
        if unit > tau:
            continue
        nd = du + quantile(code, a, b, unit)
        if nd >= mu:
            continue
        if nd < dist[v]:
            dist[v] = nd
            key[v] = nd
            pred[v] = u
            cand = nd + other[v]
            if cand < mu:
                mu = cand
                meet = v
    return mu, meet


@nb.njit(cache=True)
def shortest_path(seed, n, code, a, b, bidirectional):
    """Optimal 1 -> 2 path on K_n (vertices 0 and 1 here).

    Returns ``(weight, path, settled, direct)`` with ``path`` 0-based.
    Settled vertices leave the open set with ``key = inf``.
    """
    inf = np.inf
    df = np.full(n, inf)
    db = np.full(n, inf)
    kf = np.full(n, inf)
    kb = np.full(n, inf)
    pf = np.full(n, -1, np.int64)
    pb = np.full(n, -1, np.int64)
    donef = np.zeros(n, np.bool_)
    doneb = np.zeros(n, np.bool_)
    direct = weight(seed, 1, 2, code, a, b)
    df[0] = 0.0
    kf[0] = 0.0
    db[1] = 0.0
    kb[1] = 0.0
    # the direct edge is found when vertex 1 is relaxed; starting from it
    # only tightens pruning
    mu = direct
    meet = -2
    settled = 0
    while True:
        uf, tf = _argmin_open(kf, n)
        if bidirectional:
            ub, tb = _argmin_open(kb, n)
        else:
            ub, tb = -1, 0.0
        if uf < 0 or (bidirectional and ub < 0):
            break
        if not bidirectional:
            if uf == 1:
                break
            if tf >= mu:
                break
        elif tf + tb >= mu:
            break
        settled += 1
        if not bidirectional or tf <= tb:
            kf[uf] = inf
            donef[uf] = True
            mu, meet = _relax(seed, n, code, a, b, uf, tf, df, kf, donef, pf, db, mu, meet)
        else:
            kb[ub] = inf
            doneb[ub] = True
            mu, meet = _relax(seed, n, code, a, b, ub, tb, db, kb, doneb, pb, df, mu, meet)
    if not bidirectional:
        # vertex 1's tentative distance equals mu and pf holds its tree path
        settled += 1
    if meet == -2:
        path = np.array([0, 1], np.int64)
        return direct, path, settled, direct
    # forward chain meet -> 0, then backward chain meet -> 1
    fwd = []
    v = meet
    while v != -1:
        fwd.append(v)
        v = pf[v]
    bwd = []
    v = pb[meet]
    while v != -1:
        bwd.append(v)
        v = pb[v]
    path = np.empty(len(fwd) + len(bwd), np.int64)
    for i in range(len(fwd)):
        path[i] = fwd[len(fwd) - 1 - i]
    for i in range(len(bwd)):
        path[len(fwd) + i] = bwd[i]
    return mu, path, settled, direct
