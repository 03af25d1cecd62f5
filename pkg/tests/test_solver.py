import math

import numpy as np
import pytest

from ldes_viability import LinearProgram, build_baseline_lp, build_replacement_lp, read_mps, solve, verify, write_mps
from ldes_viability.lp import EQ, GE, LE, LPBuilder
from ldes_viability.solver import BACKENDS, Limits, Status, Tolerances
from ldes_viability.synthetic import analytic_toy, random_instance, synthetic_state

BACKEND_NAMES = sorted(BACKENDS)


def one_var(lower=-math.inf, upper=math.inf, rows=(), sense="minimize"):
    b = LPBuilder()
    x = b.add_var("x", lower, upper)
    for i, (s, rhs) in enumerate(rows):
        b.add_row(f"r{i}", [x], [1.0], s, rhs)
    return b.build(np.array([1.0]), sense=sense)


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_trivial_optimal(backend):
    res = solve(one_var(rows=[(GE, 1.0)]), backend=backend)
    assert res.status is Status.OPTIMAL
    assert res.objective == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_trivial_infeasible(backend):
    res = solve(one_var(rows=[(GE, 1.0), (LE, 0.0)]), backend=backend)
    assert res.status is Status.INFEASIBLE


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_trivial_unbounded(backend):
    res = solve(one_var(sense="maximize"), backend=backend)
    assert res.status is Status.UNBOUNDED


def test_bound_infeasible():
    b = LPBuilder()
    x = b.add_var("x", 0.0, 1.0)
    y = b.add_var("y", 0.0, 1.0)
    b.add_row("sum", [x, y], [1.0, 1.0], GE, 3.0)
    assert solve(b.build(np.ones(2))).status is Status.INFEASIBLE


def test_iteration_limit_is_a_status():
    lp = build_baseline_lp(random_instance(5))
    res = solve(lp, limits=Limits(iterations=1))
    assert res.status is Status.ITERATION_LIMIT


def test_bad_arguments():
    with pytest.raises(TypeError):
        solve("not an lp")
    with pytest.raises(ValueError, match="unknown backend"):
        solve(one_var(rows=[(GE, 1.0)]), backend="nope")
    with pytest.raises(ValueError):
        Tolerances(feasibility=0)


def test_malformed_lp_rejected():
    with pytest.raises(ValueError, match="lower > upper"):
        one_var(lower=2.0, upper=1.0)
    with pytest.raises(ValueError, match="unique"):
        LinearProgram(["a", "a"], [0, 0], [1, 1], [0, 0], [], np.zeros((0, 2)), [], [])


def test_verify_direct_evaluation():
    b = LPBuilder()
    x = b.add_var("x", 0.0, 10.0)
    y = b.add_var("y", 0.0, 10.0)
    b.add_row("eq", [x, y], [1.0, 1.0], EQ, 2.0)
    b.add_row("le", [x], [1.0], LE, 5.0)
    lp = b.build(np.ones(2))
    ok = verify(lp, {"x": 1.0, "y": 1.0})
    assert ok.max_constraint_residual == 0.0 and ok.max_bound_violation == 0.0
    off = verify(lp, {"x": 1.5, "y": 1.0})
    assert off.max_constraint_residual == 0.5
    assert verify(lp, {"x": -0.25, "y": 2.25}).max_bound_violation == 0.25
    with pytest.raises(ValueError, match="missing"):
        verify(lp, {"x": 1.0})


@pytest.mark.parametrize("backend", BACKEND_NAMES)
def test_toy_residuals(backend):
    lp = build_baseline_lp(analytic_toy())
    res = solve(lp, backend=backend)
    assert verify(lp, res.primal).worst <= 1e-6


@pytest.mark.parametrize("seed", range(6))
def test_backends_agree(seed):
    spec = random_instance(seed)
    for lp in (build_baseline_lp(spec), build_replacement_lp(spec, 10.0)):
        a, b = solve(lp, backend="ipm"), solve(lp, backend="highs")
        assert a.optimal and b.optimal
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-6)
        assert verify(lp, a.x).worst <= 1e-6


def test_deterministic():
    lp = build_baseline_lp(random_instance(2))
    a, b = solve(lp), solve(lp)
    assert a.objective == b.objective
    assert np.array_equal(a.x, b.x)


def test_mps_round_trip(tmp_path):
    lp = build_replacement_lp(random_instance(4), 5.0)
    path = write_mps(lp, tmp_path / "m.mps")
    back = read_mps(path)
    assert back.names == lp.names
    assert back.row_names == lp.row_names
    assert np.array_equal(back.lower, lp.lower)
    assert np.array_equal(back.upper, lp.upper)
    assert np.array_equal(back.cost, lp.cost)
    assert np.array_equal(back.rhs, lp.rhs)
    assert np.array_equal(back.senses, lp.senses)
    assert (back.A != lp.A).nnz == 0
    assert solve(back).objective == pytest.approx(solve(lp).objective, rel=1e-9)


def test_mps_maximize_and_free(tmp_path):
    b = LPBuilder()
    x = b.add_var("x", -math.inf, math.inf)
    y = b.add_var("y", -1.0, 4.0)
    b.add_row("r", [x, y], [1.0, 2.0], LE, 3.0)
    b.add_row("s", [x], [1.0], GE, -7.5)
    lp = b.build(np.array([1.0, -1.0]), sense="maximize", constant=2.5)
    back = read_mps(write_mps(lp, tmp_path / "m.mps"))
    assert back.sense == "maximize"
    assert back.objective_constant == 2.5
    assert solve(back).objective == pytest.approx(solve(lp).objective, rel=1e-9)


def test_reference_backend_desk_scale_timing():
    from ldes_viability import prepare_system

    spec = prepare_system(synthetic_state(horizon_h=168, n_gas=4, nuclear_mw=200, phs_mw=100))
    res = solve(build_replacement_lp(spec, 1000.0))
    assert res.optimal
    assert res.solve_time < 10.0
