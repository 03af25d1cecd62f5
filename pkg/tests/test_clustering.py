import itertools
import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldes_viability import AlreadyExpandedError, CandidateRules, build_candidates, cluster_generators, kmeans_1d
from ldes_viability.candidates import with_ldes
from ldes_viability.model import GeneratorAsset, StorageAsset, SystemSpec


def _gens(costs, caps=None, ba="BA1", tech="gas"):
    caps = caps or [100.0] * len(costs)
    return [GeneratorAsset(f"{tech}{i}", ba, tech, cap, c, 1000.0 * i, ramp_rate=0.5 + 0.05 * (i % 10))
            for i, (c, cap) in enumerate(zip(costs, caps))]


def brute_force_partition(values, weights, k):
    """Contiguous split of the sorted values minimising weighted within-cluster variance."""
    order = np.argsort(values)
    v, w = np.asarray(values, float)[order], np.asarray(weights, float)[order]
    best, best_cost = None, math.inf
    for cuts in itertools.combinations(range(1, len(v)), k - 1):
        parts = np.split(np.arange(len(v)), cuts)
        cost = sum(float(np.sum(w[p] * (v[p] - np.average(v[p], weights=w[p])) ** 2)) for p in parts)
        if cost < best_cost:
            best, best_cost = [sorted(v[p].tolist()) for p in parts], cost
    return best


def test_five_unit_fixture():
    out = cluster_generators(_gens([10, 11, 50, 52, 90]), k=3, seed=0)
    got = sorted((g.capacity_mw, g.variable_cost) for g in out)
    assert got == [(100.0, 90.0), (200.0, 10.5), (200.0, 51.0)]
    assert brute_force_partition([10, 11, 50, 52, 90], [100] * 5, 3) == [[10, 11], [50, 52], [90]]


@pytest.mark.parametrize("seed", range(5))
def test_fixture_independent_of_seed(seed):
    labels = kmeans_1d(np.array([10, 11, 50, 52, 90.0]), np.full(5, 100.0), 3, seed)
    assert labels.tolist() == [0, 0, 1, 1, 2]


def test_fewer_units_than_clusters():
    gens = _gens([30, 60])
    assert cluster_generators(gens, k=3) == gens


def test_empty_and_bad_k():
    assert cluster_generators([], k=3) == []
    with pytest.raises(ValueError):
        cluster_generators(_gens([1, 2]), k=0)


def test_intermittent_and_other_areas_untouched():
    sol = GeneratorAsset("s", "BA1", "solar", 50, 0, 0)
    gens = _gens([10, 20, 30, 40]) + _gens([5, 6], ba="BA2", tech="coal") + [sol]
    out = cluster_generators(gens, k=2)
    assert sol in out
    by_ba = defaultdict(list)
    for g in out:
        by_ba[(g.balancing_area, g.technology)].append(g)
    assert len(by_ba[("BA1", "gas")]) == 2
    assert len(by_ba[("BA2", "coal")]) == 2


def test_aggregate_attributes_are_capacity_weighted():
    out = cluster_generators(_gens([10, 12], caps=[100, 300]), k=1)
    (g,) = out
    assert g.capacity_mw == 400
    assert g.variable_cost == pytest.approx(11.5)
    assert g.fom_cost == pytest.approx(750.0)
    assert g.ramp_rate == pytest.approx(0.5375)


@settings(max_examples=60, deadline=None)
@given(
    data=st.lists(st.tuples(st.floats(1, 200), st.floats(0.5, 500)), min_size=1, max_size=9),
    k=st.integers(1, 4),
    seed=st.integers(0, 1000),
)
def test_clustering_conserves_capacity_and_mean_cost(data, k, seed):
    costs, caps = zip(*data)
    gens = _gens(list(costs), list(caps))
    out = cluster_generators(gens, k, seed)
    cap_in, cap_out = math.fsum(caps), math.fsum(g.capacity_mw for g in out)
    assert cap_out == pytest.approx(cap_in, rel=1e-9)
    mean_in = math.fsum(c * w for c, w in data) / cap_in
    mean_out = math.fsum(g.variable_cost * g.capacity_mw for g in out) / cap_out
    assert mean_out == pytest.approx(mean_in, rel=1e-9)
    assert len(out) <= min(k, len(set(costs)))
    assert cluster_generators(gens, k, seed) == out


@settings(max_examples=40, deadline=None)
@given(
    values=st.lists(st.integers(0, 100), min_size=2, max_size=7, unique=True),
    k=st.integers(1, 3),
)
def test_kmeans_matches_brute_force_on_small_sets(values, k):
    w = np.full(len(values), 1.0)
    labels = kmeans_1d(np.array(values, float), w, k, seed=0)
    clusters = [sorted(np.array(values)[labels == j].tolist()) for j in range(labels.max() + 1)]
    v = np.array(values, float)

    def cost(parts):
        return sum(float(np.sum((np.array(p) - np.mean(p)) ** 2)) for p in parts)

    assert cost(clusters) == pytest.approx(cost(brute_force_partition(v, w, min(k, len(v)))), abs=1e-9)


# --------------------------------------------------------------------------
# candidates


def _state(state="TX", solar=100.0, sdes=(("bat", "sdes_existing", 50.0),), costs=None):
    gens = (GeneratorAsset("gas", "A", "gas", 200, 40, 0), GeneratorAsset("sol", "A", "solar", solar, 0, 5))
    stores = tuple(StorageAsset(i, state, kind, 2.0 if kind != "phs" else 10.0, power_mw=p, rte=0.8)
                   for i, kind, p in sdes)
    return SystemSpec(state, 4, np.ones(4), gens, stores, {"sol": np.full(4, 0.3)},
                      candidate_costs=costs or {})


def test_solar_candidate_four_times():
    out = build_candidates(_state())
    cand = next(g for g in out.generators if g.is_candidate)
    assert cand.max_invest_mw == 400.0
    assert np.array_equal(out.cf(cand), np.full(4, 0.3))


def test_connecticut_override():
    cand = next(g for g in build_candidates(_state("CT")).generators if g.is_candidate)
    assert cand.max_invest_mw == 1000.0


def test_sdes_candidate_excludes_phs():
    spec = _state(sdes=(("bat", "sdes_existing", 50.0), ("phs", "phs", 200.0)))
    out = build_candidates(spec)
    cand = next(s for s in out.storages if s.kind == "sdes_candidate")
    assert cand.max_invest_mw == 500.0
    assert (cand.duration_h, cand.rte) == (4.0, 0.85)
    ldes = out.ldes
    assert (ldes.duration_h, ldes.rte, ldes.power_mw) == (100.0, 0.425, 0.0)


def test_candidate_costs_from_data_then_rules():
    out = build_candidates(_state(costs={"sol": 25_000.0, "bat": 60_000.0}))
    assert next(g for g in out.generators if g.is_candidate).invest_cost == 25_000.0
    assert next(s for s in out.storages if s.kind == "sdes_candidate").invest_cost == 60_000.0
    rules = CandidateRules(ies_invest_cost={"solar": 33_000.0}, sdes_invest_cost=7.0)
    out = build_candidates(_state(), rules)
    assert next(g for g in out.generators if g.is_candidate).invest_cost == 33_000.0
    assert next(s for s in out.storages if s.kind == "sdes_candidate").invest_cost == 7.0


def test_no_ies_and_no_sdes_give_zero_caps():
    out = build_candidates(_state(solar=0.0, sdes=()))
    assert next(g for g in out.generators if g.is_candidate).max_invest_mw == 0.0
    assert next(s for s in out.storages if s.kind == "sdes_candidate").max_invest_mw == 0.0


def test_candidates_twice_rejected():
    out = build_candidates(_state())
    with pytest.raises(AlreadyExpandedError):
        build_candidates(out)


def test_with_ldes_override():
    out = with_ldes(build_candidates(_state()), duration_h=4.0, rte=0.85)
    assert (out.ldes.duration_h, out.ldes.rte) == (4.0, 0.85)
    assert with_ldes(out) is out
