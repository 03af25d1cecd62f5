"""Invariant checks shared by the property tests and the acceptance suite.

Each ``check_*`` raises AssertionError with a readable message on violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ldes_viability import prepare_system, run_baseline, sweep_curve
from ldes_viability.analytics import seasonal_soc_diff
from ldes_viability.formulation import DispatchSolution
from ldes_viability.model import SystemSpec, scale_costs
from ldes_viability.sweep import BaselineResult, ViabilityCurve, max_viability
from ldes_viability.synthetic import analytic_toy, random_instance, synthetic_state, two_season_toy

REL = 1e-6


@dataclass
class Solved:
    name: str
    spec: SystemSpec
    baseline: BaselineResult
    curve: ViabilityCurve


def solve_case(name: str, spec: SystemSpec, grid) -> Solved:
    spec = prepare_system(spec)
    base = run_baseline(spec)
    return Solved(name, spec, base, sweep_curve(spec, grid, base.q_star))


def standard_cases() -> list[Solved]:
    return [
        solve_case("analytic toy", analytic_toy(), [0.5, 1, 2, 4]),
        solve_case("two-season toy", two_season_toy(), [1, 3, 10, 30]),
        solve_case("synthetic 24h", synthetic_state("SA", 24, seed=1), [30, 100, 300, 1000]),
        solve_case("synthetic 48h", synthetic_state("SB", 48, seed=2, phs_mw=80.0), [50, 200, 800]),
        solve_case("random 11", random_instance(11), [5, 20, 80]),
    ]


def check_monotone(s: Solved) -> None:
    slack = REL * max(abs(s.baseline.q_star), 1.0)
    av = s.curve.avoided
    assert np.all(np.diff(av) >= -slack), f"{s.name}: avoided cost decreases {av}"
    if s.curve.no_ldes_avoided is not None:
        assert np.all(av >= s.curve.no_ldes_avoided - slack), f"{s.name}: below the no-LDES value"


def check_identity(s: Solved) -> None:
    for p in s.curve.points:
        lhs = p.c_vc * 1000.0 * p.x_power_mw
        assert math.isclose(lhs, p.avoided_cost, rel_tol=1e-9, abs_tol=1e-9), (
            f"{s.name}: c_vc*x={lhs} vs avoided={p.avoided_cost}")
        assert p.q_over == max(0.0, -p.avoided_cost)


def check_baseline_investments(s: Solved) -> None:
    inv = s.baseline.dispatch.investments
    assert all(v == 0.0 for v in inv.values()), f"{s.name}: baseline invests {inv}"


def _dispatches(s: Solved) -> list[tuple[str, DispatchSolution]]:
    out = [("baseline", s.baseline.dispatch)]
    out += [(f"x={p.x_power_mw:g}", p.dispatch) for p in s.curve.points]
    return out


def check_storage_accounting(s: Solved) -> None:
    """Cyclic SoC recursion holds at the wrap, and discharge = rte x charge over the cycle."""
    effs = {st.id: st.efficiency for st in s.spec.storages}
    for label, d in _dispatches(s):
        for sid, soc in d.soc.items():
            eta = effs[sid]
            c, dis = d.charge[sid], d.discharge[sid]
            scale = 1.0 + float(np.max(soc, initial=0.0)) + float(c.sum())
            wrap = soc[0] - soc[-1] - eta * c[0] + dis[0] / eta
            assert abs(wrap) <= REL * scale, f"{s.name} {label} {sid}: cyclic boundary off by {wrap}"
            gap = dis.sum() - eta * eta * c.sum()
            assert abs(gap) <= REL * scale, f"{s.name} {label} {sid}: energy imbalance {gap}"


def check_reserve(s: Solved) -> None:
    need = s.spec.reserve_fraction * s.spec.load
    for label, d in _dispatches(s):
        have = sum(d.reserve.values(), np.zeros(s.spec.horizon_h)) + d.reserve_shortage
        short = need - have
        assert np.all(short <= 1e-6 * np.maximum(s.spec.load, 1.0)), (
            f"{s.name} {label}: reserve short by {short.max()}")


def check_seasonal_sums(s: Solved) -> None:
    power = {st.id: st for st in s.spec.storages}
    for label, d in _dispatches(s):
        for sid, soc in d.soc.items():
            cap = power[sid].duration_h * d.storage_power[sid]
            if cap <= 1e-9:
                continue
            diff = seasonal_soc_diff(soc, cap, s.spec.season_calendar)
            total = math.fsum(v for v in diff.values() if v is not None)
            assert abs(total) <= 1e-9, f"{s.name} {label} {sid}: seasonal sum {total}"


def check_homogeneity(s: Solved, k: float = 3.0) -> None:
    scaled = scale_costs(s.spec, k)
    base = run_baseline(scaled)
    assert math.isclose(base.q_star, k * s.baseline.q_star, rel_tol=REL), (
        f"{s.name}: q* {base.q_star} vs {k} x {s.baseline.q_star}")
    curve = sweep_curve(scaled, s.curve.x_power.tolist(), base.q_star)
    tol = REL * k * max(abs(s.baseline.q_star), 1.0)
    for p, q in zip(s.curve.points, curve.points):
        assert abs(q.avoided_cost - k * p.avoided_cost) <= tol, f"{s.name}: c_vc not scaled at {p.x_power_mw}"
    assert _argmax(curve, tol) == _argmax(s.curve, tol / k), f"{s.name}: argmax moved"


def _argmax(curve: ViabilityCurve, tol: float) -> float:
    """Smallest capacity whose avoided cost is within ``tol`` of the best ratio."""
    best = max_viability(curve).c_vc_max * 1000
    return next(p.x_power_mw for p in curve.points if p.c_vc * 1000 >= best - tol / p.x_power_mw)


ALL_CHECKS = (
    check_monotone,
    check_identity,
    check_baseline_investments,
    check_storage_accounting,
    check_reserve,
    check_seasonal_sums,
    check_homogeneity,
)
