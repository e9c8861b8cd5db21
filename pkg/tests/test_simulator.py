import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fppkn.simulator import (
    Instance,
    ResourceLimitError,
    brute_force_shortest,
    count_paths_within,
    edge_unit,
    edge_weight,
    instance_seed,
    min_weight_k_hops,
    path_weight,
    sample_batch,
    shortest_path,
    weight_matrix,
)
from fppkn.weights import parse_model

EXP1 = parse_model("powered:exp:lambda=1:rule=const(s=1)")
MODELS = [
    EXP1,
    parse_model("powered:uniform:lambda=2:rule=gammalog(gamma=2)"),
    parse_model("powered:exp:lambda=0.5:rule=powlog(c=1,a=0.75)"),
    parse_model("logfrechet:rho=1:alpha=3"),
    parse_model("negpowexp:gamma=1.5"),
]


@settings(max_examples=150, deadline=None)
@given(model=st.sampled_from(MODELS), n=st.integers(2, 9), seed=st.integers(0, 2**64 - 1),
       bidi=st.booleans())
def test_dijkstra_matches_brute_force(model, n, seed, bidi):
    inst = Instance(n, seed, model)
    got = shortest_path(inst, bidirectional=bidi)
    ref = brute_force_shortest(inst)
    assert got.path == ref.path
    assert got.hopcount == ref.hopcount == len(got.path) - 1
    assert got.weight == pytest.approx(ref.weight, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(model=st.sampled_from(MODELS), n=st.integers(3, 400), seed=st.integers(0, 2**64 - 1))
def test_result_is_a_consistent_path(model, n, seed):
    inst = Instance(n, seed, model)
    res = shortest_path(inst)
    assert res.path[0] == 1 and res.path[-1] == 2
    assert len(set(res.path)) == len(res.path)
    assert res.weight == pytest.approx(path_weight(inst, res.path), rel=1e-12)
    assert res.weight <= res.weight_of_direct_edge == edge_weight(inst, 1, 2)
    assert shortest_path(inst, bidirectional=False).path == res.path


def test_edges_are_symmetric_and_in_unit_interval():
    inst = Instance(30, 99, EXP1)
    w = weight_matrix(inst)
    assert np.array_equal(w, w.T)
    assert np.all(np.diag(w) == 0)
    for u, v in itertools.combinations(range(1, 31), 2):
        assert 0.0 < edge_unit(inst, u, v) < 1.0
        assert edge_weight(inst, u, v) == edge_weight(inst, v, u) == w[u - 1, v - 1]


def test_edge_variates_do_not_depend_on_n():
    # counter-based variates: the K_10 instance is embedded in K_20
    a, b = Instance(10, 5, EXP1), Instance(20, 5, EXP1)
    assert edge_weight(a, 3, 7) == edge_weight(b, 3, 7)


def test_edge_helpers_reject_bad_vertices():
    inst = Instance(5, 1, EXP1)
    with pytest.raises(ValueError):
        edge_weight(inst, 2, 2)
    with pytest.raises(ValueError):
        edge_weight(inst, 0, 2)
    with pytest.raises(ValueError):
        edge_weight(inst, 1, 6)


def test_seed_is_masked_to_64_bits():
    assert Instance(5, 2**64 + 3, EXP1).seed == 3


def test_n3_law_matches_closed_form():
    # on K_3, W = min(X12, X13 + X32); with Exp(1) edges
    # P(W > w) = e^{-w} * e^{-w} (1 + w)
    res = sample_batch(EXP1, 3, 4000, 11)
    w = np.array([r.weight for r in res])
    pval = stats.kstest(w, lambda t: 1 - np.exp(-2 * t) * (1 + t)).pvalue
    assert pval > 1e-3
    h2 = np.mean([r.hopcount == 2 for r in res])
    # P(X13 + X32 < X12) = E[P(Gamma(2) < X)] = 1/4
    assert abs(h2 - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 4000)


def test_hopcount_frequency_matches_poisson_oracle():
    """Very-small regime at n = 1000: P(H = 2) from a Poisson approximation
    over k-hop path classes with closed-form k-fold convolutions."""
    from scipy import special

    n, gamma = 1000, 2.0
    p = math.log(n) / gamma
    w = np.linspace(1e-4, 0.9999, 200001)
    hazards = {}
    for k in range(1, 9):
        log_count = sum(math.log(n - 1 - j) for j in range(1, k))
        log_fk = k * p * np.log(w) + k * special.gammaln(p + 1) - special.gammaln(k * p + 1)
        hazards[k] = np.exp(log_count + log_fk)
    surv = np.exp(-sum(hazards.values()))
    p2 = float(np.sum(np.gradient(hazards[2], w) * surv) * (w[1] - w[0]))
    assert p2 == pytest.approx(0.427, abs=0.005)
    res = sample_batch(parse_model("powered:uniform:lambda=1:rule=gammalog(gamma=2)"), n, 2000, 3)
    freq = np.mean([r.hopcount == 2 for r in res])
    assert abs(freq - p2) < 0.04


def test_sample_batch_is_worker_invariant():
    a = sample_batch(EXP1, 300, 17, 123, workers=1)
    b = sample_batch(EXP1, 300, 17, 123, workers=3)
    assert a == b
    assert [r.seed for r in a] == [instance_seed(123, i) for i in range(17)]


def test_count_paths_within_matches_enumeration():
    inst = Instance(8, 4, EXP1)
    for k in (1, 2, 3, 4):
        for b in (0.5, 1.0, 2.0):
            direct = 0
            for mid in itertools.permutations(range(3, 9), k - 1):
                if path_weight(inst, (1,) + mid + (2,)) <= b:
                    direct += 1
            assert count_paths_within(inst, k, b) == direct


def test_count_paths_within_refuses_huge_budget():
    with pytest.raises(ResourceLimitError):
        count_paths_within(Instance(200, 1, EXP1), 4, 50.0, work_bound=10**5)


def test_min_weight_k_hops():
    inst = Instance(9, 21, EXP1)
    best = brute_force_shortest(inst)
    ks = {}
    for k in range(1, 9):
        ref = min(path_weight(inst, (1,) + mid + (2,)) for mid in itertools.permutations(range(3, 10), k - 1))
        got = min_weight_k_hops(inst, k)
        assert got.method == "exact"
        assert got.weight == pytest.approx(ref, rel=1e-12)
        assert len(got.path) == k + 1
        relax = min_weight_k_hops(inst, k, relaxation=True)
        assert relax.method == "walk-relaxation" and relax.weight <= got.weight + 1e-12
        ks[k] = got.weight
    assert min(ks.values()) == pytest.approx(best.weight, rel=1e-12)


def test_brute_force_refuses_large_n():
    with pytest.raises(ResourceLimitError):
        brute_force_shortest(Instance(11, 0, EXP1))


def test_edge_weights_follow_the_model_law():
    # 10^6 distinct edges of one instance, KS against the model cdf
    from fppkn.weights import model_cdf

    model = parse_model("powered:uniform:lambda=1:rule=const(s=0.5)")
    inst = Instance(1500, 77, model)
    w = weight_matrix(inst)[np.triu_indices(1500, 1)][:10**6]
    assert w.size == 10**6
    ks = stats.kstest(w, lambda x: np.vectorize(lambda t: model_cdf(model, 1500, t))(x)).statistic
    assert ks < 0.002


def test_seeds_decorrelate_edges():
    a, b = Instance(200, 1, EXP1), Instance(200, 2, EXP1)
    pairs = list(itertools.combinations(range(1, 200), 2))[:10**4]
    same = sum(edge_weight(a, u, v) == edge_weight(b, u, v) for u, v in pairs)
    assert same <= 1
    assert edge_weight(a, 3, 7) == edge_weight(a, 7, 3)


def test_tiny_instances():
    inst = Instance(2, 5, EXP1)
    r = shortest_path(inst)
    assert r.hopcount == 1 and r.weight == edge_weight(inst, 1, 2)
    assert brute_force_shortest(inst).path == (1, 2)
    inst = Instance(3, 5, EXP1)
    ref = min(edge_weight(inst, 1, 2), edge_weight(inst, 1, 3) + edge_weight(inst, 3, 2))
    assert brute_force_shortest(inst).weight == pytest.approx(ref, rel=1e-15)
    assert shortest_path(inst).weight == pytest.approx(ref, rel=1e-15)


def test_shortest_never_beats_direct_edge_and_hop_one_iff_direct():
    for r in sample_batch(EXP1, 60, 100, 5):
        assert r.weight <= r.weight_of_direct_edge
        assert (r.hopcount == 1) == (r.weight == r.weight_of_direct_edge)


def test_count_paths_within_examples():
    from fppkn.simulator import PathBudgetQuery

    inst = Instance(5, 0, EXP1)
    assert count_paths_within(inst, PathBudgetQuery(2, math.inf)) == 3
    assert count_paths_within(inst, PathBudgetQuery(2, 0.0)) == 0
    for n in range(3, 10):
        for k in range(1, n):
            assert count_paths_within(Instance(n, 1, EXP1), k, math.inf) == math.perm(n - 2, k - 1)
    # K_6 has only 12 three-edge paths, so the budget is their median weight
    inst = Instance(6, 3, EXP1)
    weights = [path_weight(inst, (1,) + mid + (2,)) for mid in itertools.permutations(range(3, 7), 2)]
    b = float(np.median(weights))
    assert count_paths_within(inst, PathBudgetQuery(3, b)) == sum(x <= b for x in weights)
    with pytest.raises(ValueError):
        PathBudgetQuery(0, 1.0)


def test_min_weight_k_hops_n12():
    inst = Instance(12, 8, EXP1)
    weights = [path_weight(inst, (1,) + mid + (2,)) for mid in itertools.permutations(range(3, 13), 2)]
    assert len(weights) == 90
    assert min_weight_k_hops(inst, 3).weight == pytest.approx(min(weights), rel=1e-12)
    assert min_weight_k_hops(inst, 1).weight == edge_weight(inst, 1, 2)
    with pytest.raises(ResourceLimitError):
        min_weight_k_hops(Instance(17, 0, EXP1), 3)


def test_sample_batch_is_repeatable_and_matches_oracle():
    a = sample_batch(EXP1, 9, 200, 31)
    assert a == sample_batch(EXP1, 9, 200, 31)
    for r in a:
        ref = brute_force_shortest(Instance(9, r.seed, EXP1))
        assert r.path == ref.path and r.weight == pytest.approx(ref.weight, rel=1e-12)
