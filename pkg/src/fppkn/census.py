"""Counting ordered pairs of k-edge 1 -> 2 paths on K_n by shared edges.

``P(k, l)`` is the set of ordered pairs ``(p, q)`` of self-avoiding paths from
vertex 1 to vertex 2 with exactly ``k`` edges each that share exactly ``l``
edges.  Three counts are provided:

* :func:`pair_count_exact`: exact integer count, either by full enumeration
  (``n <= 10``) or by fixing one path and enumerating the second one up to
  relabelling of the vertices off the fixed path;
* :func:`pair_count_asymptotic`: the leading term ``(l + 1) n**(2k - l - 2)``;
* :func:`pair_count_upper`: the combinatorial upper bound obtained by
  decomposing the second path into excursions away from the first.

All arithmetic is on Python integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Optional

import numpy as np

__all__ = [
    "PairCensusResult",
    "CensusLimitError",
    "path_count_exact",
    "pair_count_exact",
    "pair_counts",
    "pair_counts_enumerated",
    "pair_counts_reduced",
    "pair_count_asymptotic",
    "pair_count_upper",
    "census",
    "ERROR_LAW_C",
]

#: Constant of the empirical error law ``|exact/asymptotic - 1| <= C k**4 / n``.
#: Fitted by ``demos/fit_census_constant.py`` on n in {25, 50}; see that script.
ERROR_LAW_C = 0.14

MAX_ENUMERATION_N = 10
MAX_REDUCED_K = 8


class CensusLimitError(ValueError):
    """Query outside the sizes this module is willing to count exactly."""


def _check(n, k, l=None):
    if n < 3:
        raise ValueError("n must be at least 3")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, n-1] = [1, {n - 1}], got {k}")
    if l is not None and not 0 <= l <= k:
        raise ValueError(f"l must lie in [0, k] = [0, {k}], got {l}")


def path_count_exact(n: int, k: int) -> int:
    """``|S_12(k)| = (n-2)! / (n-k-1)!``: number of k-edge 1 -> 2 paths."""
    if k < 1 or k >= n:
        raise ValueError(f"k must lie in [1, n-1], got n={n}, k={k}")
    return math.perm(n - 2, k - 1)


def _falling(m, r):
    return math.perm(m, r) if 0 <= r <= m else 0


@lru_cache(maxsize=None)
def _reduced_patterns(k: int):
    """Histogram ``{(shared, outside): count}`` over second paths ``q``.

    The fixed path is ``0, 1, ..., k`` (0 and k standing for vertices 1 and
    2).  Each interior position of ``q`` holds either an unused interior
    vertex of the fixed path or a fresh outside vertex; outside vertices
    touch no edge of the fixed path, so only the pattern matters.
    """
    hist: dict = {}
    used = [False] * (k + 1)

    def rec(pos, last, shared, outside):
        if pos == k:
            s = shared + (1 if last == k - 1 else 0)
            hist[(s, outside)] = hist.get((s, outside), 0) + 1
            return
        rec(pos + 1, -1, shared, outside + 1)
        for v in range(1, k):
            if used[v]:
                continue
            used[v] = True
            step = 1 if last >= 0 and abs(last - v) == 1 else 0
            rec(pos + 1, v, shared + step, outside)
            used[v] = False

    # q starts at vertex 0 of the fixed path
    if k == 1:
        return {(1, 0): 1}
    for v in range(1, k):
        used[v] = True
        rec(2, v, 1 if v == 1 else 0, 0)
        used[v] = False
    rec(2, -1, 0, 1)
    return hist


def pair_counts_reduced(n: int, k: int) -> list:
    """``[|P(k, 0)|, ..., |P(k, k)|]`` by symmetry reduction.

    Relabellings of ``{3..n}`` act transitively on k-edge paths, so the
    number of partners sharing ``l`` edges does not depend on the first path.
    """
    _check(n, k)
    if k > MAX_REDUCED_K:
        raise CensusLimitError(f"symmetry-reduced census is limited to k <= {MAX_REDUCED_K}")
    free = n - k - 1
    per_path = [0] * (k + 1)
    for (s, r), c in _reduced_patterns(k).items():
        per_path[s] += c * _falling(free, r)
    total = path_count_exact(n, k)
    return [total * c for c in per_path]


def _edge_masks(n, k):
    index = {}
    for u in range(n):
        for v in range(u + 1, n):
            index[(u, v)] = len(index)
    masks = []
    for mid in permutations(range(2, n), k - 1):
        path = (0,) + mid + (1,)
        m = 0
        for a, b in zip(path, path[1:]):
            m |= 1 << index[(a, b) if a < b else (b, a)]
        masks.append(m)
    return np.array(masks, dtype=np.uint64)


def pair_counts_enumerated(n: int, k: int, chunk: int = 512) -> list:
    """``[|P(k, 0)|, ..., |P(k, k)|]`` by enumerating all ordered pairs."""
    _check(n, k)
    if n > MAX_ENUMERATION_N:
        raise CensusLimitError(f"full enumeration is limited to n <= {MAX_ENUMERATION_N}")
    masks = _edge_masks(n, k)
    counts = np.zeros(k + 1, dtype=np.int64)
    for i in range(0, masks.size, chunk):
        common = np.bitwise_count(masks[i : i + chunk, None] & masks[None, :])
        counts += np.bincount(common.ravel(), minlength=k + 1)[: k + 1]
    return [int(c) for c in counts]


def pair_counts(n: int, k: int, method: str = "auto") -> list:
    """Exact ``|P(k, l)|`` for ``l = 0..k``.

    ``method`` is ``"reduced"``, ``"enumerate"`` or ``"auto"`` (reduced when
    ``k <= 8``, else enumeration for ``n <= 10``).
    """
    if method == "reduced":
        return pair_counts_reduced(n, k)
    if method == "enumerate":
        return pair_counts_enumerated(n, k)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if k <= MAX_REDUCED_K:
        return pair_counts_reduced(n, k)
    if n <= MAX_ENUMERATION_N:
        return pair_counts_enumerated(n, k)
    raise CensusLimitError(
        f"no exact method for n={n}, k={k} (need k <= {MAX_REDUCED_K} or n <= {MAX_ENUMERATION_N})"
    )


def pair_count_exact(n: int, k: int, l: int, method: str = "auto") -> int:
    """``|P(k, l)|``, ordered pairs including ``p = q``."""
    _check(n, k, l)
    return pair_counts(n, k, method)[l]


def pair_count_asymptotic(n: int, k: int, l: int) -> float:
    """Leading-order ``|P(k, l)|`` for ``1 <= l <= k``.

    ``(l+1) n**(2k-l-2)`` for ``l <= k-2``; zero for ``l = k-1``; the exact
    path count for ``l = k``.
    """
    if l == 0:
        raise ValueError("Theorem covers l ∈ [1,k]")
    _check(n, k, l)
    if l == k:
        return float(path_count_exact(n, k))
    if l == k - 1:
        return 0.0
    return float((l + 1) * n ** (2 * k - l - 2))


def pair_count_upper(n: int, k: int, l: int) -> int:
    """Excursion-decomposition bound on ``|P(k, l)|`` for ``1 <= l <= k-2``.

    ``m`` counts the excursions of the second path away from the first.
    """
    if not 1 <= l <= k - 2:
        raise ValueError("the bound is stated for 1 <= l <= k-2")
    _check(n, k, l)
    total = 0
    for m in range(1, k - l + 1):
        prod = 1
        for j in range(2, 2 * k - l - m + 1):
            prod *= n - j
            if prod == 0:
                break
        total += (
            math.comb(m + l, m)
            * math.comb(k - l - 1, m - 1) ** 2
            * math.factorial(m - 1)
            * 2 ** (m - 1)
            * prod
        )
    return total


@dataclass(frozen=True)
class PairCensusResult:
    n: int
    k: int
    l: int
    exact: Optional[int]
    asymptotic: Optional[float]
    upper: Optional[int]

    @property
    def rel_error(self) -> Optional[float]:
        if self.exact is None or not self.asymptotic:
            return None
        return abs(self.exact / self.asymptotic - 1.0)


def census(n: int, k: int, method: str = "auto", exact: bool = True) -> list:
    """One :class:`PairCensusResult` per ``l = 0..k``.

    Entries a formula does not cover are ``None``.
    """
    _check(n, k)
    counts = pair_counts(n, k, method) if exact else [None] * (k + 1)
    out = []
    for l in range(k + 1):
        asym = pair_count_asymptotic(n, k, l) if l >= 1 else None
        upper = pair_count_upper(n, k, l) if 1 <= l <= k - 2 else None
        out.append(PairCensusResult(n, k, l, counts[l], asym, upper))
    return out
