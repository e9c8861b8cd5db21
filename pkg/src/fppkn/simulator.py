"""First passage percolation on K_n with lazily generated i.i.d. edge weights.

An :class:`Instance` is ``(n, seed, model)``.  The weight of edge ``{u, v}``
is a pure function of the seed and the canonical pair, so no weight matrix is
ever stored by :func:`shortest_path` and results do not depend on evaluation
order or on how replications are spread over worker processes.

Vertices are labelled ``1..n``; the optimal path always runs from 1 to 2.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as K
from .weights import LogFrechet, NegPowerExp, Powered, Uniform, WeightModel

__all__ = [
    "Instance",
    "SpResult",
    "HopOptimum",
    "PathBudgetQuery",
    "ResourceLimitError",
    "kernel_params",
    "instance_seed",
    "edge_unit",
    "edge_weight",
    "weight_matrix",
    "path_weight",
    "shortest_path",
    "brute_force_shortest",
    "count_paths_within",
    "min_weight_k_hops",
    "sample_batch",
]

MASK64 = (1 << 64) - 1


class ResourceLimitError(RuntimeError):
    """A computation was refused because it would exceed its work bound."""


def kernel_params(model: WeightModel, n: int):
    """``(code, a, b)`` describing the model law at size ``n`` to the kernels."""
    if isinstance(model, Powered):
        code = K.POWERED_UNIFORM if isinstance(model.base, Uniform) else K.POWERED_EXP
        return code, float(model.sn(n)), float(model.lam_factor(n))
    if isinstance(model, LogFrechet):
        return K.LOG_FRECHET, float(model.rho), float(model.alpha)
    if isinstance(model, NegPowerExp):
        return K.NEG_POWER_EXP, float(model.gamma), 0.0
    raise TypeError(f"unknown model {model!r}")


@dataclass(frozen=True)
class Instance:
    n: int
    seed: int
    model: WeightModel

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    @property
    def params(self):
        return kernel_params(self.model, self.n)


class SpResult(NamedTuple):
    weight: float
    hopcount: int
    path: tuple
    settled: int
    weight_of_direct_edge: float
    seed: int = 0


class HopOptimum(NamedTuple):
    """Minimum weight over k-edge routes; ``method`` is ``"exact"`` or
    ``"walk-relaxation"`` (a lower bound over walks that may revisit
    vertices)."""

    weight: float
    method: str
    path: tuple = ()


def instance_seed(master_seed: int, index: int) -> int:
    """Seed of replication ``index`` under ``master_seed``."""
    return int(K.mix_seed(np.uint64(int(master_seed) & MASK64), np.uint64(index)))


def _check_vertex(inst, u, v):
    if u == v:
        raise ValueError("an edge needs two distinct endpoints")
    for x in (u, v):
        if not 1 <= x <= inst.n:
            raise ValueError(f"vertex {x} outside [1, {inst.n}]")


def edge_unit(inst: Instance, u: int, v: int) -> float:
    """Uniform variate in ``(0, 1)`` attached to edge ``{u, v}``."""
    _check_vertex(inst, u, v)
    a, b = (u, v) if u < v else (v, u)
    return float(K.edge_unit(np.uint64(inst.seed), a, b))


def edge_weight(inst: Instance, u: int, v: int) -> float:
    _check_vertex(inst, u, v)
    code, a, b = inst.params
    return float(K.weight(np.uint64(inst.seed), u, v, code, a, b))


def weight_matrix(inst: Instance) -> np.ndarray:
    """Dense symmetric ``n x n`` weight matrix (0-based; zero diagonal)."""
    code, a, b = inst.params
    return K.weight_matrix(np.uint64(inst.seed), inst.n, code, a, b)


def path_weight(inst: Instance, path: Sequence[int]) -> float:
    return math.fsum(edge_weight(inst, u, v) for u, v in zip(path, path[1:]))


def shortest_path(inst: Instance, bidirectional: bool = True) -> SpResult:
    """Minimum-weight self-avoiding path from vertex 1 to vertex 2.

    Dijkstra with lazy edge generation and O(n) memory.  The default searches
    from both endpoints and stops once the two frontiers certify the
    incumbent; ``bidirectional=False`` runs the one-sided search from vertex 1
    until vertex 2 is settled.  Both prune edges that cannot beat the best
    path found so far.
    """
    code, a, b = inst.params
    w, path, settled, direct = K.shortest_path(
        np.uint64(inst.seed), inst.n, code, a, b, bidirectional
    )
    path = tuple(int(v) + 1 for v in path)
    return SpResult(float(w), len(path) - 1, path, int(settled), float(direct), inst.seed)


def brute_force_shortest(inst: Instance) -> SpResult:
    """Exact optimum by enumerating every self-avoiding 1 -> 2 path (n <= 10)."""
    n = inst.n
    if n > 10:
        raise ResourceLimitError("brute force enumeration is limited to n <= 10")
    w = weight_matrix(inst).tolist()
    best = [math.inf, None]
    visited = [False] * n
    visited[0] = True
    stack = [0]

    def extend(u, acc):
        for v in range(1, n):
            if visited[v]:
                continue
            t = acc + w[u][v]
            if v == 1:
                if t < best[0]:
                    best[0] = t
                    best[1] = stack + [1]
                continue
            visited[v] = True
            stack.append(v)
            extend(v, t)
            stack.pop()
            visited[v] = False

    extend(0, 0.0)
    path = tuple(v + 1 for v in best[1])
    n_paths = sum(math.perm(n - 2, j) for j in range(n - 1))
    return SpResult(best[0], len(path) - 1, path, n_paths, w[0][1], inst.seed)


@dataclass(frozen=True)
class PathBudgetQuery:
    """Count k-edge paths of weight at most ``budget``."""

    k: int
    budget: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        if not self.budget >= 0:
            raise ValueError("budget must be nonnegative")


def count_paths_within(inst: Instance, query, budget: Optional[float] = None, work_bound: int = 10**8) -> int:
    """``N_k(b)``: number of self-avoiding k-edge 1 -> 2 paths of weight <= b.

    ``query`` is a :class:`PathBudgetQuery`, or ``k`` with ``budget`` given
    separately.

    Depth-first search over self-avoiding prefixes restricted to edges of
    weight <= b, pruning prefixes heavier than ``budget``.  Raises
    :class:`ResourceLimitError` ("budget too generous") once more than
    ``work_bound`` prefixes have been expanded.
    """
    if not isinstance(query, PathBudgetQuery):
        query = PathBudgetQuery(int(query), float(budget))
    k, budget = query.k, query.budget
    n = inst.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    if budget <= 0:
        return 0
    w = weight_matrix(inst)
    light = [
        [(int(v), float(w[u, v])) for v in np.flatnonzero(w[u] <= budget) if v != u]
        for u in range(n)
    ]
    visited = [False] * n
    visited[0] = True
    work = [0]

    def dfs(u, depth, acc):
        work[0] += 1
        if work[0] > work_bound:
            raise ResourceLimitError("budget too generous: DFS work bound exceeded")
        if depth == k - 1:
            x = w[u, 1]
            return 1 if u != 1 and acc + x <= budget and x <= budget else 0
        total = 0
        for v, x in light[u]:
            if visited[v] or v == 1:
                continue
            t = acc + x
            if t > budget:
                continue
            visited[v] = True
            total += dfs(v, depth + 1, t)
            visited[v] = False
        return total

    return dfs(0, 0, 0.0)


def _greedy_k_walk(w, k):
    n = w.shape[0]
    visited = {0, 1}
    u, acc, path = 0, 0.0, [0]
    for _ in range(k - 1):
        cand = [v for v in range(n) if v not in visited]
        v = min(cand, key=lambda c: w[u, c])
        acc += w[u, v]
        visited.add(v)
        path.append(v)
        u = v
    return acc + w[u, 1], path + [1]


def min_weight_k_hops(inst: Instance, k: int, relaxation: bool = False) -> HopOptimum:
    """``W_n(k)``: minimum weight over self-avoiding 1 -> 2 paths with k edges.

    Exact mode (n <= 16) is a branch-and-bound DFS seeded with a greedy
    k-hop path.  ``relaxation=True`` returns the hop-layered dynamic program
    over k-edge walks instead, a lower bound flagged ``"walk-relaxation"``.
    """
    n = inst.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    if relaxation:
        return _walk_relaxation(inst, k)
    if n > 16:
        raise ResourceLimitError("exact W_n(k) is limited to n <= 16; use relaxation=True")
    w = weight_matrix(inst)
    if k == 1:
        return HopOptimum(float(w[0, 1]), "exact", (1, 2))
    best_w, best_path = _greedy_k_walk(w, k)
    best = [best_w, best_path]
    # cheapest edge weight, for an admissible remaining-cost bound
    wmin = float(np.min(w[np.triu_indices(n, 1)]))
    rows = w.tolist()
    visited = [False] * n
    visited[0] = visited[1] = True
    stack = [0]

    def dfs(u, depth, acc):
        remaining = k - depth
        if acc + remaining * wmin >= best[0]:
            return
        if remaining == 1:
            t = acc + rows[u][1]
            if t < best[0]:
                best[0] = t
                best[1] = stack + [1]
            return
        for v in range(2, n):
            if visited[v]:
                continue
            visited[v] = True
            stack.append(v)
            dfs(v, depth + 1, acc + rows[u][v])
            stack.pop()
            visited[v] = False

    dfs(0, 0, 0.0)
    return HopOptimum(float(best[0]), "exact", tuple(v + 1 for v in best[1]))


def _walk_relaxation(inst, k):
    w = weight_matrix(inst)
    np.fill_diagonal(w, np.inf)
    d = w[0].copy()
    for _ in range(k - 1):
        d = np.min(d[:, None] + w, axis=0)
    return HopOptimum(float(d[1]), "walk-relaxation")


def _run_chunk(args):
    model, n, seeds, bidirectional = args
    return [shortest_path(Instance(n, s, model), bidirectional) for s in seeds]


def sample_batch(
    model: WeightModel,
    n: int,
    reps: int,
    master_seed: int,
    workers: int = 1,
    bidirectional: bool = True,
) -> list:
    """``reps`` independent replications; replication ``i`` uses
    ``instance_seed(master_seed, i)``.  Output is ordered by replication
    index and does not depend on ``workers``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    seeds = [instance_seed(master_seed, i) for i in range(reps)]
    if workers <= 1 or reps == 1:
        return _run_chunk((model, n, seeds, bidirectional))
    size = max(1, math.ceil(reps / (4 * workers)))
    chunks = [(model, n, seeds[i : i + size], bidirectional) for i in range(0, reps, size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        out = []
        for part in pool.map(_run_chunk, chunks):
            out.extend(part)
    return out
