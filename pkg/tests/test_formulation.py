import math

import numpy as np
import pytest

from ldes_viability import (
    ConsistencyError,
    ModelMode,
    breakdown,
    build_baseline_lp,
    build_opportunity_lp,
    build_replacement_lp,
    extract_dispatch,
    solve,
)
from ldes_viability.formulation import COST_TERMS, over_cost_weight
from ldes_viability.model import GeneratorAsset, StorageAsset, SystemSpec
from ldes_viability.synthetic import analytic_toy, random_instance


def gas_only(load=(1.0, 1.0)):
    gas = GeneratorAsset("gas1", "BA1", "gas", 1.0, 50.0, 10.0)
    return SystemSpec("XX", len(load), np.array(load), (gas,), (), {}, reserve_fraction=0.0)


def test_variable_count_by_hand():
    gas = GeneratorAsset("g", "A", "gas", 10, 5, 0)
    bat = StorageAsset("b", "XX", "sdes_existing", 2, power_mw=1)
    spec = SystemSpec("XX", 2, np.ones(2), (gas,), (bat,), {})
    lp = build_baseline_lp(spec, storage_reserve=False)
    # per hour: p, r, c, d, soc, shed, surplus, shortage
    assert lp.num_variables == 2 * (1 * 2 + 1 * 3 + 3) == 16
    # balance, reserve, gas headroom, soc recursion, per hour
    assert lp.num_constraints == 2 * 4
    with_reserve = build_baseline_lp(spec)
    assert with_reserve.num_variables == 16 + 2


def test_investment_placeholders_pinned_at_zero():
    lp = build_baseline_lp(analytic_toy())
    j = lp.variable_index["x_gen[sol+cand]"]
    assert lp.lower[j] == lp.upper[j] == 0.0
    # the LDES is absent from the baseline
    assert not any(n.startswith("soc[XX:ldes]") for n in lp.names)


def test_baseline_toy_breakdown():
    lp = build_baseline_lp(gas_only())
    res = solve(lp)
    assert res.optimal
    assert res.objective == pytest.approx(110.0, rel=1e-9)
    bd = breakdown(lp, res.x)
    assert bd.ope_gen == pytest.approx(100.0, rel=1e-9)
    assert bd.fom_gen == pytest.approx(10.0)
    assert bd.total == pytest.approx(110.0, rel=1e-9)
    others = [v for k, v in bd.cost_terms.items() if k not in ("ope_gen", "fom_gen")]
    assert max(abs(v) for v in others) < 1e-6


def test_zero_load_costs_only_fom():
    spec = gas_only(load=(0.0, 0.0, 0.0))
    lp = build_baseline_lp(spec)
    res = solve(lp)
    bd = breakdown(lp, res.x)
    assert bd.total == pytest.approx(10.0, rel=1e-9)
    assert bd.fom_gen == 10.0
    assert abs(bd.ope_gen) < 1e-6


def test_short_horizon_rejected():
    with pytest.raises(ValueError, match="2 hours"):
        build_baseline_lp(gas_only(load=(1.0,)))


def test_replacement_toy():
    spec = analytic_toy()
    for x, expected in ((1.0, 60.0), (2.0, 60.0)):
        lp = build_replacement_lp(spec, x)
        res = solve(lp)
        assert res.objective == pytest.approx(expected, rel=1e-9)
        assert res.primal["x_gen[sol+cand]"] == pytest.approx(2.0, rel=1e-6)
        assert not any(n.startswith("p[gas1]") for n in lp.names)


def test_opportunity_toy_direct():
    spec = analytic_toy()
    for x, cvc in ((1.0, 50.0), (2.0, 25.0)):
        lp = build_opportunity_lp(spec, ModelMode("opportunity", x, 110.0))
        res = solve(lp)
        assert lp.sense == "maximize"
        assert res.primal["c_vc"] == pytest.approx(cvc, rel=1e-6)
        assert res.primal["q_over"] == pytest.approx(0.0, abs=1e-6)
        bd = breakdown(lp, res.x)
        assert bd.total == pytest.approx(110.0, rel=1e-6)


def test_opportunity_over_cost_when_replacement_is_dearer():
    # with q* below the replacement cost the over-cost absorbs the difference
    lp = build_opportunity_lp(analytic_toy(), ModelMode("opportunity", 1.0, 40.0))
    res = solve(lp)
    assert res.primal["c_vc"] == pytest.approx(-20.0, rel=1e-6)
    assert res.primal["q_over"] == pytest.approx(0.0, abs=1e-6)
    assert over_cost_weight(1.0) > 1.0


def test_model_mode_validation():
    with pytest.raises(ValueError):
        ModelMode("opportunity", 0.0, 1.0)
    with pytest.raises(ValueError):
        ModelMode("opportunity", 1.0, math.inf)
    with pytest.raises(ValueError):
        ModelMode("other")
    with pytest.raises(ValueError):
        build_opportunity_lp(analytic_toy(), ModelMode())


def test_breakdown_rejects_infeasible_point():
    lp = build_baseline_lp(gas_only())
    with pytest.raises(ConsistencyError) as info:
        breakdown(lp, np.zeros(lp.num_variables))
    assert info.value.max_residual == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(8))
def test_breakdown_total_matches_objective(seed):
    lp = build_baseline_lp(random_instance(seed))
    res = solve(lp)
    bd = breakdown(lp, res.x)
    assert bd.total == pytest.approx(res.objective, rel=1e-6)
    assert set(bd.cost_terms) == set(COST_TERMS)


def test_dispatch_extraction_shapes():
    spec = random_instance(3)
    lp = build_baseline_lp(spec)
    d = extract_dispatch(lp, solve(lp).x)
    H = spec.horizon_h
    for series in (*d.generation.values(), *d.soc.values(), d.shed, d.surplus, d.reserve_shortage):
        assert series.shape == (H,)
        assert (series >= 0).all()
    assert all(v == 0.0 for v in d.investments.values())
