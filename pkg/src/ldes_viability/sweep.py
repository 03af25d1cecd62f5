"""Baseline solve, viability cost at one LDES capacity, and the capacity sweep."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SolveError
from .formulation import (
    DispatchSolution,
    ModelMode,
    ObjectiveBreakdown,
    breakdown,
    build_baseline_lp,
    build_opportunity_lp,
    build_replacement_lp,
    extract_dispatch,
)
from .model import THERMAL, SystemSpec
from .solver import DEFAULT_BACKEND, Tolerances, solve

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_GRID_RANGE_MW = (100.0, 150_000.0)
DEFAULT_GRID_POINTS = 40
DEFAULT_REFINE_POINTS = 8
MIN_VIABLE_DEFINITION = "smallest grid capacity with avoided cost >= 0"


@dataclass
class BaselineResult:
    q_star: float
    dispatch: DispatchSolution
    breakdown: ObjectiveBreakdown
    thermal_capacity_mw: float
    solve_time: float = 0.0


@dataclass
class ViabilityPoint:
    """Viability cost at one imposed LDES power.

    ``c_vc`` is in $/kW; ``c_vc_per_mw`` is the internal value in $/MW.
    """

    x_power_mw: float
    c_vc: float
    avoided_cost: float
    q_over: float
    breakdown: ObjectiveBreakdown
    dispatch: DispatchSolution | None = field(default=None, repr=False, compare=False)
    solve_time: float = 0.0

    @property
    def c_vc_per_mw(self) -> float:
        return self.avoided_cost / self.x_power_mw

    def as_dict(self) -> dict:
        return {
            "x_power_mw": self.x_power_mw,
            "c_vc_per_kw": self.c_vc,
            "avoided_cost": self.avoided_cost,
            "q_over": self.q_over,
        }


@dataclass
class ViabilityCurve:
    state: str
    points: list[ViabilityPoint]
    q_star: float = math.nan
    no_ldes_avoided: float | None = None
    no_ldes_dispatch: DispatchSolution | None = field(default=None, repr=False)
    no_ldes_breakdown: ObjectiveBreakdown | None = field(default=None, repr=False)
    diagnostics: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def x_power(self) -> np.ndarray:
        return np.array([p.x_power_mw for p in self.points])

    @property
    def c_vc(self) -> np.ndarray:
        return np.array([p.c_vc for p in self.points])

    @property
    def avoided(self) -> np.ndarray:
        return np.array([p.avoided_cost for p in self.points])


# --------------------------------------------------------------------------
# solves


def _solve_or_raise(lp, backend: str, tol: Tolerances | None, stage: str, state: str):
    res = solve(lp, tol, backend=backend)
    if not res.optimal:
        raise SolveError(res.status.value, stage, state)
    return res


def run_baseline(spec: SystemSpec, *, backend: str = DEFAULT_BACKEND, tol: Tolerances | None = None) -> BaselineResult:
    lp = build_baseline_lp(spec)
    res = _solve_or_raise(lp, backend, tol, "baseline", spec.state)
    bd = breakdown(lp, res.x)
    return BaselineResult(
        q_star=res.objective,
        dispatch=extract_dispatch(lp, res.x),
        breakdown=bd,
        thermal_capacity_mw=spec.thermal_capacity_mw,
        solve_time=res.solve_time,
    )


def replacement_cost(
    spec: SystemSpec,
    x_power_mw: float,
    *,
    backend: str = DEFAULT_BACKEND,
    tol: Tolerances | None = None,
    retire: frozenset[str] = THERMAL,
) -> tuple[float, ObjectiveBreakdown, DispatchSolution, float]:
    """Least cost after retirement with ``x_power_mw`` of LDES at no charge."""
    lp = build_replacement_lp(spec, x_power_mw, retire=retire)
    res = _solve_or_raise(lp, backend, tol, f"opportunity x={x_power_mw:g} MW", spec.state)
    return res.objective, breakdown(lp, res.x), extract_dispatch(lp, res.x), res.solve_time


def viability_at(
    spec: SystemSpec,
    x_power_mw: float,
    q_star: float,
    *,
    backend: str = DEFAULT_BACKEND,
    tol: Tolerances | None = None,
    method: str = "two_step",
    retire: frozenset[str] = THERMAL,
) -> ViabilityPoint:
    """Viability cost of LDES at one imposed power.

    ``two_step`` minimises the replacement cost with the LDES free and takes
    ``(q* - cost*) / x``. ``direct`` solves the maximisation with the
    viability cost and over-cost as variables; both give the same optimum.
    """
    if not x_power_mw > 0:
        raise ValueError(f"x_power_mw must be > 0, got {x_power_mw}")
    if not math.isfinite(q_star):
        raise ValueError("q_star must be finite")
    if method == "two_step":
        cost, bd, dispatch, t = replacement_cost(spec, x_power_mw, backend=backend, tol=tol, retire=retire)
        avoided = q_star - cost
    elif method == "direct":
        lp = build_opportunity_lp(spec, ModelMode("opportunity", x_power_mw, q_star, frozenset(retire)))
        res = _solve_or_raise(lp, backend, tol, f"opportunity x={x_power_mw:g} MW", spec.state)
        full = breakdown(lp, res.x)
        dispatch, t = extract_dispatch(lp, res.x), res.solve_time
        avoided = res.primal["c_vc"] * x_power_mw
        bd = replace(full, ldes_term=0.0, q_over=0.0, total=full.total - full.ldes_term)
    else:
        raise ValueError(f"unknown method {method!r}")
    c_int = avoided / x_power_mw
    bd = replace(bd, ldes_term=c_int * x_power_mw, q_over=max(0.0, -avoided), total=bd.total + c_int * x_power_mw)
    return ViabilityPoint(
        x_power_mw=float(x_power_mw),
        c_vc=c_int / 1000.0,
        avoided_cost=avoided,
        q_over=max(0.0, -avoided),
        breakdown=bd,
        dispatch=dispatch,
        solve_time=t,
    )


# --------------------------------------------------------------------------
# grids


def default_grid(
    lo: float = DEFAULT_GRID_RANGE_MW[0], hi: float = DEFAULT_GRID_RANGE_MW[1], n: int = DEFAULT_GRID_POINTS
) -> list[float]:
    if n == 1:
        return [float(lo)]
    return [float(v) for v in np.round(np.geomspace(lo, hi, n), 6)]


def refinement_grid(curve: ViabilityCurve, n: int = DEFAULT_REFINE_POINTS) -> list[float]:
    """``n`` log-spaced capacities between the neighbours of the current maximum."""
    if n <= 0 or not curve.points:
        return []
    xs = curve.x_power
    i = int(np.argmax(curve.c_vc == max_viability(curve).c_vc_max))
    lo = xs[i - 1] if i > 0 else xs[i] / 2
    hi = xs[i + 1] if i + 1 < len(xs) else xs[i] * 2
    cand = np.geomspace(lo, hi, n + 2)[1:-1]
    existing = set(xs.tolist())
    return [float(v) for v in np.round(cand, 6) if v not in existing and v > 0]


def validate_grid(grid) -> list[float]:
    grid = [float(x) for x in grid]
    if not grid:
        raise ValueError("grid is empty")
    if any(not (math.isfinite(x) and x > 0) for x in grid):
        raise ValueError("grid values must be finite and > 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    return grid


def _point_job(args):
    spec, x, q_star, backend, tol, method = args
    try:
        return viability_at(spec, x, q_star, backend=backend, tol=tol, method=method)
    except SolveError as exc:
        return exc


def _map(jobs: int, args: list):
    if jobs <= 1 or len(args) <= 1:
        return [_point_job(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_point_job, args))


def sweep_curve(
    spec: SystemSpec,
    grid,
    q_star: float,
    *,
    backend: str = DEFAULT_BACKEND,
    tol: Tolerances | None = None,
    jobs: int = 1,
    refine: int = 0,
    strict: bool = True,
    method: str = "two_step",
) -> ViabilityCurve:
    """Viability point at each grid capacity, ordered by capacity.

    With ``refine > 0`` extra points are placed around the maximum found on
    ``grid``. With ``strict=False`` a failed solve is recorded in
    ``curve.failures`` and the sweep continues.
    """
    grid = validate_grid(grid)
    curve = ViabilityCurve(spec.state, [], q_star)

    def run(xs: list[float]) -> None:
        out = _map(jobs, [(spec, x, q_star, backend, tol, method) for x in xs])
        for x, r in zip(xs, out):
            if isinstance(r, SolveError):
                if strict:
                    raise r
                curve.failures.append({"state": spec.state, "stage": r.stage, "status": r.status, "x_power_mw": x})
            else:
                curve.points.append(r)
        curve.points.sort(key=lambda p: p.x_power_mw)

    run(grid)
    if refine and curve.points:
        run(refinement_grid(curve, refine))
    try:
        cost0, bd0, disp0, _ = replacement_cost(spec, 0.0, backend=backend, tol=tol)
        curve.no_ldes_avoided = q_star - cost0
        curve.no_ldes_breakdown, curve.no_ldes_dispatch = bd0, disp0
    except SolveError as exc:
        if strict:
            raise
        curve.failures.append({"state": spec.state, "stage": exc.stage, "status": exc.status, "x_power_mw": 0.0})
    curve.diagnostics = check_curve(curve, lossless=frozenset(s.id for s in spec.storages if s.rte >= 1.0))
    for msg in curve.diagnostics:
        # cycling storage is usually a tie between optima, not an error
        level = logging.INFO if msg.startswith("simultaneous") else logging.WARNING
        logger.log(level, "%s: %s", spec.state, msg)
    return curve


def check_curve(curve: ViabilityCurve, rel: float = 1e-6, lossless: frozenset[str] = frozenset()) -> list[str]:
    """Curve invariants that hold for exact optima; violations signal solver trouble.

    Storages in ``lossless`` are exempt from the charge/discharge check since
    cycling them costs nothing and an interior optimum may do so.
    """
    out = []
    slack = rel * max(abs(curve.q_star), 1.0)
    pts = curve.points
    for a, b in zip(pts, pts[1:]):
        if b.avoided_cost < a.avoided_cost - slack:
            out.append(f"avoided cost drops from {a.avoided_cost:.6g} at {a.x_power_mw:g} MW "
                       f"to {b.avoided_cost:.6g} at {b.x_power_mw:g} MW")
    if curve.no_ldes_avoided is not None:
        for p in pts:
            if p.avoided_cost < curve.no_ldes_avoided - slack:
                out.append(f"avoided cost at {p.x_power_mw:g} MW is below the no-LDES value")
    for p in pts:
        if p.dispatch is None:
            continue
        both = {k: v for k, v in p.dispatch.simultaneous_charge_discharge().items() if k not in lossless}
        if both:
            out.append(f"simultaneous charge/discharge at {p.x_power_mw:g} MW: "
                       + ", ".join(f"{k} ({v} h)" for k, v in sorted(both.items())))
    return out


# --------------------------------------------------------------------------
# headline scalars


@dataclass(frozen=True)
class MaxViability:
    c_vc_max: float
    x_at_max: float
    viable: bool


def max_viability(curve: ViabilityCurve) -> MaxViability:
    """Largest viability cost; ties go to the smallest capacity."""
    if not curve.points:
        raise ValueError("curve has no points")
    best = curve.points[0]
    for p in curve.points[1:]:
        if p.c_vc > best.c_vc:
            best = p
    return MaxViability(best.c_vc, best.x_power_mw, best.c_vc >= 0)


def min_viable_capacity(curve: ViabilityCurve) -> float | None:
    """Smallest grid capacity whose avoided cost is non-negative."""
    for p in curve.points:
        if p.avoided_cost >= 0:
            return p.x_power_mw
    return None


def viable_bracket(curve: ViabilityCurve) -> tuple[float, float] | None:
    """Capacities between which avoided cost first turns non-negative.

    The lower end is the last negative grid point, or 0 when the first point
    is already non-negative.
    """
    prev = 0.0
    for p in curve.points:
        if p.avoided_cost >= 0:
            return (prev, p.x_power_mw)
        prev = p.x_power_mw
    return None


def alpha_ratio(x_at_max: float, thermal_capacity_mw: float) -> float | None:
    if not thermal_capacity_mw > 0:
        return None
    return x_at_max / thermal_capacity_mw


def curve_report(curve: ViabilityCurve, thermal_capacity_mw: float | None = None) -> dict:
    """Plot-ready JSON record of a curve and its headline scalars."""
    out = {
        "schema_version": SCHEMA_VERSION,
        "state": curve.state,
        "q_star": curve.q_star,
        "points": [p.as_dict() for p in curve.points],
        "no_ldes_avoided_cost": curve.no_ldes_avoided,
        "min_viable_definition": MIN_VIABLE_DEFINITION,
        "diagnostics": list(curve.diagnostics),
    }
    if curve.points:
        mv = max_viability(curve)
        out.update(
            c_vc_max=mv.c_vc_max,
            x_at_max_mw=mv.x_at_max,
            viable=mv.viable,
            min_viable_mw=min_viable_capacity(curve),
            min_viable_bracket_mw=viable_bracket(curve),
            alpha=alpha_ratio(mv.x_at_max, thermal_capacity_mw) if thermal_capacity_mw is not None else None,
        )
    else:
        out.update(c_vc_max=None, x_at_max_mw=None, viable=False, min_viable_mw=None,
                   min_viable_bracket_mw=None, alpha=None)
    return out
