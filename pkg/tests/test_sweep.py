import dataclasses

import numpy as np
import pytest

from ldes_viability import (
    SolveError,
    ViabilityCurve,
    ViabilityPoint,
    alpha_ratio,
    curve_report,
    default_grid,
    max_viability,
    min_viable_capacity,
    prepare_system,
    run_baseline,
    sweep_curve,
    viability_at,
)
from ldes_viability.formulation import ObjectiveBreakdown
from ldes_viability.solver import register_backend
from ldes_viability.solver.base import SolveResult, Status
from ldes_viability.sweep import check_curve, refinement_grid, viable_bracket
from ldes_viability.synthetic import analytic_toy, synthetic_state

BD = ObjectiveBreakdown()


def curve_of(values, xs=None):
    xs = xs or [float(i + 1) for i in range(len(values))]
    pts = [ViabilityPoint(x, v / 1000.0, v * x, max(0.0, -v * x), BD) for x, v in zip(xs, values)]
    return ViabilityCurve("ZZ", pts, q_star=1000.0)


@pytest.fixture(scope="module")
def toy_baseline():
    return run_baseline(analytic_toy())


def test_toy_q_star(toy_baseline):
    assert toy_baseline.q_star == pytest.approx(110.0, rel=1e-6)
    assert toy_baseline.breakdown.total == pytest.approx(toy_baseline.q_star, rel=1e-6)
    assert toy_baseline.thermal_capacity_mw == 1.0
    assert all(v == 0.0 for v in toy_baseline.dispatch.investments.values())


def test_toy_points(toy_baseline):
    p1 = viability_at(analytic_toy(), 1.0, toy_baseline.q_star)
    assert p1.c_vc_per_mw == pytest.approx(50.0, rel=1e-6)
    assert p1.c_vc == pytest.approx(0.05, rel=1e-6)
    assert p1.avoided_cost == pytest.approx(50.0, rel=1e-6)
    assert p1.q_over == 0.0
    assert p1.breakdown.ldes_term == pytest.approx(p1.avoided_cost)
    assert p1.breakdown.total == pytest.approx(toy_baseline.q_star, rel=1e-6)


def test_toy_curve(toy_baseline):
    curve = sweep_curve(analytic_toy(), [1, 2, 4], toy_baseline.q_star)
    np.testing.assert_allclose(curve.c_vc * 1000, [50, 25, 12.5], rtol=1e-6)
    mv = max_viability(curve)
    assert mv.x_at_max == 1.0 and mv.viable
    assert mv.c_vc_max == pytest.approx(0.05, rel=1e-6)
    assert min_viable_capacity(curve) == 1.0
    assert curve.diagnostics == []
    # no LDES: gas retired and solar cannot cover hour 1
    assert curve.no_ldes_avoided < 0


@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_two_step_matches_direct(toy_baseline, x):
    spec = analytic_toy()
    a = viability_at(spec, x, toy_baseline.q_star, method="two_step")
    b = viability_at(spec, x, toy_baseline.q_star, method="direct")
    assert a.c_vc == pytest.approx(b.c_vc, rel=1e-6)
    assert a.breakdown.total == pytest.approx(b.breakdown.total, rel=1e-6)


def test_direct_matches_two_step_on_synthetic():
    spec = prepare_system(synthetic_state(horizon_h=24, seed=2))
    q = run_baseline(spec).q_star
    a = viability_at(spec, 300.0, q)
    b = viability_at(spec, 300.0, q, method="direct")
    assert a.avoided_cost == pytest.approx(b.avoided_cost, rel=1e-6, abs=1e-6 * q)


def test_negative_viability_without_candidates(toy_baseline):
    spec = analytic_toy()
    capped = spec.replace(generators=tuple(
        g if not g.is_candidate else dataclasses.replace(g, max_invest_mw=0.0) for g in spec.generators
    ))
    p = viability_at(capped, 1.0, toy_baseline.q_star)
    assert p.c_vc < 0
    assert p.q_over == pytest.approx(-p.avoided_cost)
    assert p.q_over > 0


def test_point_arguments(toy_baseline):
    with pytest.raises(ValueError):
        viability_at(analytic_toy(), 0.0, 110.0)
    with pytest.raises(ValueError):
        viability_at(analytic_toy(), 1.0, float("nan"))
    with pytest.raises(ValueError, match="method"):
        viability_at(analytic_toy(), 1.0, 110.0, method="bogus")


@pytest.mark.parametrize("grid", [[], [0, 1], [2, 1], [1, 1], [-1]])
def test_grid_validation(grid):
    with pytest.raises(ValueError):
        sweep_curve(analytic_toy(), grid, 110.0)


def test_single_point_curve(toy_baseline):
    curve = sweep_curve(analytic_toy(), [2.0], toy_baseline.q_star)
    assert len(curve.points) == 1
    assert max_viability(curve).x_at_max == 2.0


def test_refinement_adds_points_near_max(toy_baseline):
    curve = sweep_curve(analytic_toy(), [1, 2, 4], toy_baseline.q_star, refine=3)
    xs = curve.x_power.tolist()
    assert len(xs) == 5 and xs == sorted(xs)  # the midpoint coincides with 1 MW
    assert all(0.5 < x < 2 for x in xs if x not in (1, 2, 4))


def test_default_grid():
    g = default_grid()
    assert len(g) == 40
    assert g[0] == 100.0 and g[-1] == 150_000.0
    assert all(b > a for a, b in zip(g, g[1:]))
    assert default_grid(5, 5, 1) == [5.0]


def test_max_viability_ties_and_negatives():
    tie = curve_of([3.0, 3.0, 3.0])
    assert max_viability(tie).x_at_max == 1.0
    neg = curve_of([-5.0, -2.0, -7.0])
    mv = max_viability(neg)
    assert mv.x_at_max == 2.0 and not mv.viable
    assert min_viable_capacity(neg) is None
    assert viable_bracket(neg) is None
    with pytest.raises(ValueError):
        max_viability(ViabilityCurve("ZZ", []))


def test_min_viable_bracket():
    c = curve_of([-4.0, -1.0, 2.0, 3.0], xs=[10.0, 20.0, 40.0, 80.0])
    assert min_viable_capacity(c) == 40.0
    assert viable_bracket(c) == (20.0, 40.0)
    assert viable_bracket(curve_of([1.0])) == (0.0, 1.0)


def test_alpha():
    assert alpha_ratio(50_000, 100_000) == 0.5
    assert alpha_ratio(7.0, 7.0) == 1.0
    assert alpha_ratio(1.0, 0.0) is None


def test_check_curve_flags_drop():
    c = curve_of([10.0, 1.0])  # avoided 10 then 2
    assert any("drops" in m for m in check_curve(c))
    assert check_curve(curve_of([10.0, 6.0])) == []


def test_refinement_grid_empty():
    assert refinement_grid(ViabilityCurve("ZZ", []), 4) == []
    assert refinement_grid(curve_of([1.0]), 0) == []


def test_curve_report_fields(toy_baseline):
    curve = sweep_curve(analytic_toy(), [1, 2], toy_baseline.q_star)
    rep = curve_report(curve, toy_baseline.thermal_capacity_mw)
    for key in ("state", "q_star", "points", "c_vc_max", "x_at_max_mw", "min_viable_mw", "alpha"):
        assert key in rep
    assert rep["alpha"] == 1.0
    assert set(rep["points"][0]) == {"x_power_mw", "c_vc_per_kw", "avoided_cost", "q_over"}
    empty = curve_report(ViabilityCurve("ZZ", []))
    assert empty["c_vc_max"] is None


def _failing(lp, tol, limits):
    return SolveResult(Status.ITERATION_LIMIT, float("nan"), np.zeros(lp.num_variables), lp.names,
                       float("inf"), 0.0, "failing")


def test_failures_strict_and_lenient():
    register_backend("always_fails", _failing)
    with pytest.raises(SolveError) as info:
        run_baseline(analytic_toy(), backend="always_fails")
    assert info.value.stage == "baseline" and info.value.state == "XX"
    with pytest.raises(SolveError):
        sweep_curve(analytic_toy(), [1.0], 110.0, backend="always_fails")
    curve = sweep_curve(analytic_toy(), [1.0, 2.0], 110.0, backend="always_fails", strict=False)
    assert curve.points == []
    assert [f["x_power_mw"] for f in curve.failures] == [1.0, 2.0, 0.0]
    assert all(f["status"] == "iteration_limit" for f in curve.failures)


def test_parallel_matches_serial():
    spec = prepare_system(synthetic_state(horizon_h=24, seed=4))
    q = run_baseline(spec).q_star
    grid = [50.0, 200.0, 800.0]
    a = sweep_curve(spec, grid, q, jobs=1)
    b = sweep_curve(spec, grid, q, jobs=2)
    assert [p.as_dict() for p in a.points] == [p.as_dict() for p in b.points]
