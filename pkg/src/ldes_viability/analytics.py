"""Explanatory statistics per state, seasonal analyses, and multi-state summaries."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .formulation import COST_TERMS, DispatchSolution, ObjectiveBreakdown
from .model import SEASONS, THERMAL, WIND, SystemSpec
from .sweep import BaselineResult, ViabilityCurve, ViabilityPoint, alpha_ratio, max_viability


@dataclass
class StateMetrics:
    state: str
    thermal_participation: float | None
    thermal_utilization: float | None
    avg_ies_cf: float | None
    thermal_fom_share: float | None
    solar_share: float | None
    wind_share: float | None
    alpha: float | None
    c_vc_max: float | None
    x_at_max_mw: float | None
    seasonal_soc_diff: dict[str, float | None] = field(default_factory=dict)
    seasonal_ies_availability: dict[str, dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def compute_state_metrics(
    spec: SystemSpec, baseline: BaselineResult, curve: ViabilityCurve | None = None
) -> StateMetrics:
    """Baseline-run statistics plus the curve's maximum and seasonal LDES behaviour."""
    H = spec.horizon_h
    existing = spec.existing_generators()
    gen = baseline.dispatch.generation
    thermal = [g for g in existing if g.technology in THERMAL]
    ies = [g for g in existing if g.is_intermittent]
    thermal_mwh = math.fsum(float(gen[g.id].sum()) for g in thermal)
    thermal_cap = math.fsum(g.capacity_mw for g in thermal)
    demand = float(spec.load.sum())

    ies_cap = math.fsum(g.capacity_mw for g in ies)
    avg_cf = _ratio(math.fsum(g.capacity_mw * float(spec.cf(g).mean()) for g in ies), ies_cap)
    solar_mwh = math.fsum(float(gen[g.id].sum()) for g in ies if g.technology == "solar")
    wind_mwh = math.fsum(float(gen[g.id].sum()) for g in ies if g.technology in WIND)
    ies_mwh = solar_mwh + wind_mwh
    thermal_fom = math.fsum(g.fom_cost * g.capacity_mw for g in thermal)

    alpha = c_max = x_max = None
    soc_diff: dict[str, float | None] = {s: None for s in SEASONS}
    if curve is not None and curve.points:
        mv = max_viability(curve)
        c_max, x_max = mv.c_vc_max, mv.x_at_max
        alpha = alpha_ratio(x_max, baseline.thermal_capacity_mw)
        point = next(p for p in curve.points if p.x_power_mw == x_max)
        ldes = spec.ldes
        if ldes is not None and point.dispatch is not None and ldes.id in point.dispatch.soc:
            soc_diff = seasonal_soc_diff(
                point.dispatch.soc[ldes.id], ldes.duration_h * x_max, spec.season_calendar
            )
    return StateMetrics(
        state=spec.state,
        thermal_participation=_ratio(thermal_mwh, demand),
        thermal_utilization=_ratio(thermal_mwh, thermal_cap * H),
        avg_ies_cf=avg_cf,
        thermal_fom_share=_ratio(thermal_fom, baseline.q_star),
        solar_share=_ratio(solar_mwh, ies_mwh),
        wind_share=_ratio(wind_mwh, ies_mwh),
        alpha=alpha,
        c_vc_max=c_max,
        x_at_max_mw=x_max,
        seasonal_soc_diff=soc_diff,
        seasonal_ies_availability=seasonal_ies_availability(spec),
    )


def _runs(calendar: np.ndarray) -> list[tuple[int, int, int]]:
    """Contiguous ``(start, stop, code)`` runs of the calendar."""
    cal = np.asarray(calendar)
    if cal.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(cal)) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [cal.size]])
    return [(int(a), int(b), int(cal[a])) for a, b in zip(starts, stops)]


def seasonal_soc_diff(
    soc: np.ndarray,
    energy_cap: float,
    calendar: np.ndarray,
    initial: float | None = None,
) -> dict[str, float | None]:
    """Change in stored energy over each season as a fraction of capacity.

    ``soc[t]`` is the level at the end of hour ``t``; ``initial`` is the level
    before hour 0 and defaults to the final level (cyclic operation). A
    season split by the year boundary sums both pieces, so the four values
    add up to ``(soc[-1] - initial) / energy_cap``.
    """
    soc = np.asarray(soc, dtype=float)
    if soc.shape != np.shape(calendar):
        raise ValueError(f"soc has {soc.size} values, calendar has {np.size(calendar)}")
    if not energy_cap > 0:
        return {s: None for s in SEASONS}
    start = soc[-1] if initial is None else float(initial)
    level = np.concatenate([[start], soc])  # level[t] = level before hour t
    out = {s: 0.0 for s in SEASONS}
    for a, b, code in _runs(calendar):
        out[SEASONS[code]] += float(level[b] - level[a]) / energy_cap
    return out


def seasonal_ies_availability(spec: SystemSpec) -> dict[str, dict[str, float]]:
    """Per season: capacity-weighted mean CF of the existing IES fleet and
    its available energy as a fraction of demand."""
    ies = [g for g in spec.existing_generators() if g.is_intermittent]
    cap = math.fsum(g.capacity_mw for g in ies)
    if not ies or cap <= 0:
        return {}
    avail = np.sum([g.capacity_mw * spec.cf(g) for g in ies], axis=0)
    out = {}
    for code, season in enumerate(SEASONS):
        mask = spec.season_calendar == code
        if not mask.any():
            continue
        load = float(spec.load[mask].sum())
        out[season] = {
            "avg_cf": float(avail[mask].mean() / cap),
            "rel_availability": float(avail[mask].sum() / load) if load > 0 else math.nan,
        }
    return out


def classify_threshold(results: Mapping[str, float], threshold: float) -> list[str]:
    """States whose maximum viability cost reaches ``threshold``, highest first."""
    if math.isnan(threshold):
        raise ValueError("threshold must not be NaN")
    hits = [(v, s) for s, v in results.items() if v >= threshold]
    return [s for v, s in sorted(hits, key=lambda t: (-t[0], t[1]))]


def histogram(values: Sequence[float], bin_width: float, origin: float = 0.0) -> list[dict]:
    """Counts of positive values in half-open bins ``[start, start + width)``.

    Only non-empty bins are listed.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    counts: dict[int, int] = defaultdict(int)
    for v in values:
        if v > 0:
            counts[math.floor((v - origin) / bin_width)] += 1
    return [{"bin_start": origin + k * bin_width, "count": n} for k, n in sorted(counts.items())]


# --------------------------------------------------------------------------
# multi-state roll-up


@dataclass
class StateResult:
    """One state's solved pipeline, as consumed by ``national_rollup``."""

    spec: SystemSpec
    baseline: BaselineResult
    point: ViabilityPoint
    no_ldes_breakdown: ObjectiveBreakdown | None = None
    no_ldes_dispatch: DispatchSolution | None = None

    @property
    def state(self) -> str:
        return self.spec.state


def _baseline_capacity(spec: SystemSpec) -> dict[str, float]:
    cap: dict[str, float] = defaultdict(float)
    for g in spec.existing_generators():
        cap[g.technology] += g.capacity_mw
    for s in spec.storages:
        if s.kind in ("sdes_existing", "phs"):
            cap["sdes" if s.kind == "sdes_existing" else "phs"] += s.power_mw
    return dict(cap)


def _investments(spec: SystemSpec, dispatch: DispatchSolution) -> dict[str, float]:
    inv: dict[str, float] = defaultdict(float)
    techs = {g.id: g.technology for g in spec.generators}
    for aid, mw in dispatch.investments.items():
        inv[techs.get(aid, "sdes")] += mw
    return dict(inv)


def _opportunity_capacity(spec: SystemSpec, dispatch: DispatchSolution, ldes_mw: float) -> dict[str, float]:
    cap = {k: v for k, v in _baseline_capacity(spec).items() if k not in THERMAL}
    for tech, mw in _investments(spec, dispatch).items():
        cap[tech] = cap.get(tech, 0.0) + mw
    if ldes_mw > 0:
        cap["ldes"] = ldes_mw
    return cap


def _sum_maps(maps: list[Mapping[str, float]]) -> dict[str, float]:
    keys = sorted({k for m in maps for k in m})
    return {k: math.fsum(m.get(k, 0.0) for m in maps) for k in keys}


def national_rollup(state_results: Sequence[StateResult]) -> dict:
    """Sum capacities and cost terms over states with non-negative viability.

    Each state enters at its chosen LDES capacity (normally the one that
    maximises its viability cost). ``replacement_mw`` is the new capacity per
    technology that stands in for the retired gas and coal.
    """
    horizons = {r.spec.horizon_h for r in state_results}
    if len(horizons) > 1:
        raise ValidationError(f"states use different horizons: {sorted(horizons)}")
    included = sorted((r for r in state_results if r.point.c_vc >= 0), key=lambda r: r.state)
    excluded = sorted(r.state for r in state_results if r.point.c_vc < 0)

    def terms(bd: ObjectiveBreakdown | None) -> dict[str, float]:
        return {t: getattr(bd, t) for t in COST_TERMS} if bd is not None else {}

    base_cap = [_baseline_capacity(r.spec) for r in included]
    opp_cap = [_opportunity_capacity(r.spec, r.point.dispatch, r.point.x_power_mw) for r in included]
    invest = [_investments(r.spec, r.point.dispatch) for r in included]
    retired = [{t: v for t, v in c.items() if t in THERMAL} for c in base_cap]
    out = {
        "states": [r.state for r in included],
        "excluded_states": excluded,
        "horizon_h": horizons.pop() if horizons else None,
        "ldes_mw": math.fsum(r.point.x_power_mw for r in included),
        "capacity_mw": {
            "baseline": _sum_maps(base_cap),
            "opportunity": _sum_maps(opp_cap),
        },
        "cost": {
            "baseline": _sum_maps([terms(r.baseline.breakdown) for r in included]),
            "opportunity": _sum_maps([terms(r.point.breakdown) for r in included]),
        },
        "q_star": math.fsum(r.baseline.q_star for r in included),
        "avoided_cost": math.fsum(r.point.avoided_cost for r in included),
        "retired_mw": _sum_maps(retired),
        "replacement_mw": _sum_maps(invest),
    }
    with_no_ldes = [r for r in included if r.no_ldes_dispatch is not None]
    if with_no_ldes and len(with_no_ldes) == len(included):
        out["capacity_mw"]["no_ldes"] = _sum_maps(
            [_opportunity_capacity(r.spec, r.no_ldes_dispatch, 0.0) for r in included])
        out["cost"]["no_ldes"] = _sum_maps([terms(r.no_ldes_breakdown) for r in included])
    return out
