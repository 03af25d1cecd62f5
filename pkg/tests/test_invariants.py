import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import invariants as inv
from ldes_viability import build_replacement_lp, prepare_system, run_baseline, solve, sweep_curve
from ldes_viability.model import scale_costs
from ldes_viability.sweep import replacement_cost
from ldes_viability.synthetic import random_instance, synthetic_state


@pytest.fixture(scope="module")
def cases():
    return inv.standard_cases()


@pytest.mark.parametrize("check", inv.ALL_CHECKS, ids=lambda f: f.__name__)
def test_invariant_on_standard_cases(cases, check):
    for case in cases:
        check(case)


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(0, 100_000))
def test_invariants_on_random_instances(seed):
    case = inv.solve_case(f"random {seed}", random_instance(seed), [2.0, 10.0, 50.0])
    for check in inv.ALL_CHECKS:
        if check is not inv.check_homogeneity:
            check(case)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 100_000), k=st.sampled_from([0.5, 2.0, 10.0]))
def test_homogeneity_random(seed, k):
    inv.check_homogeneity(inv.solve_case(f"random {seed}", random_instance(seed), [3.0, 30.0]), k)


def test_scale_costs_scales_every_term():
    spec = prepare_system(synthetic_state("SC", 24, seed=3))
    a, b = run_baseline(spec), run_baseline(scale_costs(spec, 4.0))
    for term, v in a.breakdown.cost_terms.items():
        assert b.breakdown.cost_terms[term] == pytest.approx(4.0 * v, rel=1e-6, abs=1e-6 * a.q_star)


def test_no_retirement_no_candidates_recovers_q_star():
    spec = prepare_system(synthetic_state("SD", 24, seed=5))
    frozen = spec.replace(
        generators=tuple(g if not g.is_candidate else type(g)(
            g.id, g.balancing_area, g.technology, 0.0, g.variable_cost, g.fom_cost, kind="candidate",
            state=g.state) for g in spec.generators),
        storages=tuple(s if s.kind != "sdes_candidate" else type(s)(s.id, s.state, s.kind, s.duration_h,
                                                                     rte=s.rte) for s in spec.storages),
    )
    q = run_baseline(frozen).q_star
    cost0, *_ = replacement_cost(frozen, 0.0, retire=frozenset())
    assert cost0 == pytest.approx(q, rel=1e-6)
    small, *_ = replacement_cost(frozen, 1e-3, retire=frozenset())
    assert q - small >= -1e-6 * q
    assert q - small <= 1e-2 * q


def test_larger_ldes_never_hurts():
    spec = prepare_system(synthetic_state("SE", 24, seed=6))
    q = run_baseline(spec).q_star
    curve = sweep_curve(spec, list(np.geomspace(10, 5000, 8)), q)
    assert np.all(np.diff(curve.avoided) >= -1e-6 * q)
    lp = build_replacement_lp(spec, 0.0)
    assert solve(lp).objective == pytest.approx(q - curve.no_ldes_avoided, rel=1e-9)
