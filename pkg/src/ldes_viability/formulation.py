"""Translate a SystemSpec into explicit linear programs.

Three programs share one operational core (hourly balance, reserve,
storage state of charge with a cyclic boundary, ramping):

* ``build_baseline_lp`` - minimum total cost of the existing fleet, every
  investment variable pinned to zero.
* ``build_replacement_lp`` - the same cost minimisation after retiring
  thermal units, with IES/SDES investment open and an LDES of imposed power
  that is free of charge. Its optimum ``cost*`` gives the viability cost
  directly as ``(q* - cost*) / x_power``.
* ``build_opportunity_lp`` - the viability-cost program proper: maximise
  ``c_vc - C_over * q_over`` subject to ``costs + c_vc * x_power <= q* + q_over``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConsistencyError
from .lp import EQ, GE, LE, LinearProgram, LPBuilder
from .model import THERMAL, SystemSpec
from .solver.base import scaled_residual, verify

COST_TERMS = (
    "inv_gen",
    "inv_st_short",
    "ope_gen",
    "ies_gen",
    "imbalance",
    "ies_shortage",
    "fom_gen",
    "fom_st_short",
)
# penalty weight on q_over is (1 + OVER_EPSILON) / x_power
OVER_EPSILON = 1e3


@dataclass(frozen=True)
class ModelMode:
    mode: str = "baseline"
    x_power_mw: float = 0.0
    q_star: float = math.nan
    retire_technologies: frozenset[str] = THERMAL

    def __post_init__(self) -> None:
        if self.mode not in ("baseline", "opportunity"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "opportunity":
            if not self.x_power_mw > 0:
                raise ValueError(f"x_power_mw must be > 0, got {self.x_power_mw}")
            if not math.isfinite(self.q_star):
                raise ValueError("q_star must be finite in opportunity mode")


@dataclass
class LPIndex:
    """Where each physical decision lives in the variable vector."""

    horizon: int
    gen_p: dict[str, np.ndarray] = field(default_factory=dict)
    gen_r: dict[str, np.ndarray] = field(default_factory=dict)
    gen_x: dict[str, int] = field(default_factory=dict)
    st_c: dict[str, np.ndarray] = field(default_factory=dict)
    st_d: dict[str, np.ndarray] = field(default_factory=dict)
    st_soc: dict[str, np.ndarray] = field(default_factory=dict)
    st_r: dict[str, np.ndarray] = field(default_factory=dict)
    st_x: dict[str, int] = field(default_factory=dict)
    st_power: dict[str, float] = field(default_factory=dict)
    shed: np.ndarray | None = None
    surplus: np.ndarray | None = None
    shortage: np.ndarray | None = None
    balance_rows: np.ndarray | None = None
    reserve_rows: np.ndarray | None = None


def _operational(
    spec: SystemSpec,
    *,
    invest_open: bool,
    retire: frozenset[str],
    ldes_power: float,
    storage_reserve: bool,
) -> tuple[LPBuilder, LPIndex]:
    H = spec.horizon_h
    prev = np.roll(np.arange(H), 1)  # cyclic predecessor hour
    b = LPBuilder()
    ix = LPIndex(H)
    for term in COST_TERMS:
        b.add_constant(term, 0.0)
    pen = spec.penalty_prices
    balance: list[tuple[np.ndarray, object]] = []
    reserve: list[tuple[np.ndarray, object]] = []

    for g in spec.generators:
        if g.technology in retire:
            continue
        cf = spec.cf(g)
        firm = not g.is_intermittent
        if g.is_candidate:
            x = b.add_var(f"x_gen[{g.id}]", 0.0, g.max_invest_mw if invest_open else 0.0)
            xs = np.full(H, x)
            ix.gen_x[g.id] = x
            b.add_cost("inv_gen", [x], g.invest_cost)
            b.add_cost("fom_gen", [x], g.fom_cost)
            p = b.add_vars(f"p[{g.id}]", H)
            r = b.add_vars(f"r[{g.id}]", H) if firm else None
            cap_terms = [(p, 1.0), (xs, -cf)]
            if firm:
                cap_terms.append((r, 1.0))
            b.add_rows(f"cap[{g.id}]", H, cap_terms, LE, 0.0)
        else:
            p = b.add_vars(f"p[{g.id}]", H, 0.0, g.capacity_mw * cf)
            r = b.add_vars(f"r[{g.id}]", H, 0.0, g.capacity_mw) if firm else None
            if firm:
                b.add_rows(f"head[{g.id}]", H, [(p, 1.0), (r, 1.0)], LE, g.capacity_mw)
            b.add_constant("fom_gen", g.fom_cost * g.capacity_mw)
        if firm and g.ramp_rate < 1.0 and H >= 2:
            t = np.arange(1, H)
            if g.is_candidate:
                xr = np.full(H - 1, ix.gen_x[g.id])
                b.add_rows(f"ramp_up[{g.id}]", H - 1, [(p[t], 1.0), (p[t - 1], -1.0), (xr, -g.ramp_rate)], LE, 0.0)
                b.add_rows(f"ramp_dn[{g.id}]", H - 1, [(p[t - 1], 1.0), (p[t], -1.0), (xr, -g.ramp_rate)], LE, 0.0)
            else:
                lim = g.ramp_rate * g.capacity_mw
                b.add_rows(f"ramp_up[{g.id}]", H - 1, [(p[t], 1.0), (p[t - 1], -1.0)], LE, lim)
                b.add_rows(f"ramp_dn[{g.id}]", H - 1, [(p[t - 1], 1.0), (p[t], -1.0)], LE, lim)
        ix.gen_p[g.id] = p
        b.add_cost("ope_gen", p, g.variable_cost)
        balance.append((p, 1.0))
        if firm:
            ix.gen_r[g.id] = r
            reserve.append((r, 1.0))
            b.add_cost("ies_gen", r, pen.reserve_provision_cost)

    for s in spec.storages:
        eta = s.efficiency
        if s.kind == "ldes":
            if ldes_power <= 0:
                continue
            P = float(ldes_power)
        elif s.kind == "sdes_candidate":
            P = None
        else:
            P = s.power_mw
        if P is None:
            x = b.add_var(f"x_st[{s.id}]", 0.0, s.max_invest_mw if invest_open else 0.0)
            ix.st_x[s.id] = x
            xs = np.full(H, x)
            c = b.add_vars(f"c[{s.id}]", H)
            d = b.add_vars(f"d[{s.id}]", H)
            soc = b.add_vars(f"soc[{s.id}]", H)
            r = b.add_vars(f"rs[{s.id}]", H) if storage_reserve else None
            b.add_rows(f"cmax[{s.id}]", H, [(c, 1.0), (xs, -1.0)], LE, 0.0)
            dterms = [(d, 1.0), (xs, -1.0)] + ([(r, 1.0)] if storage_reserve else [])
            b.add_rows(f"dmax[{s.id}]", H, dterms, LE, 0.0)
            b.add_rows(f"emax[{s.id}]", H, [(soc, 1.0), (xs, -s.duration_h)], LE, 0.0)
            b.add_cost("inv_st_short", [x], s.invest_cost)
            b.add_cost("fom_st_short", [x], s.fom_cost)
        else:
            ix.st_power[s.id] = P
            c = b.add_vars(f"c[{s.id}]", H, 0.0, P)
            d = b.add_vars(f"d[{s.id}]", H, 0.0, P)
            soc = b.add_vars(f"soc[{s.id}]", H, 0.0, s.duration_h * P)
            r = b.add_vars(f"rs[{s.id}]", H, 0.0, P) if storage_reserve else None
            if storage_reserve:
                b.add_rows(f"dmax[{s.id}]", H, [(d, 1.0), (r, 1.0)], LE, P)
            if s.kind != "ldes":
                b.add_constant("fom_st_short", s.fom_cost * P)
        b.add_rows(
            f"soc_bal[{s.id}]", H,
            [(soc, 1.0), (soc[prev], -1.0), (c, -eta), (d, 1.0 / eta)], EQ, 0.0,
        )
        if storage_reserve:
            # reserve plus discharge must be deliverable from the stored energy
            b.add_rows(f"sres[{s.id}]", H, [(d, 1.0), (r, 1.0), (soc[prev], -eta)], LE, 0.0)
            ix.st_r[s.id] = r
            reserve.append((r, 1.0))
            b.add_cost("ies_gen", r, pen.reserve_provision_cost)
        ix.st_c[s.id], ix.st_d[s.id], ix.st_soc[s.id] = c, d, soc
        balance += [(d, 1.0), (c, -1.0)]

    shed = b.add_vars("shed", H)
    surplus = b.add_vars("surplus", H)
    short = b.add_vars("short", H)
    ix.shed, ix.surplus, ix.shortage = shed, surplus, short
    ix.balance_rows = b.add_rows("balance", H, balance + [(shed, 1.0), (surplus, -1.0)], EQ, spec.load)
    ix.reserve_rows = b.add_rows(
        "reserve", H, reserve + [(short, 1.0)], GE, spec.reserve_fraction * spec.load
    )
    b.add_cost("imbalance", shed, pen.imbalance_shed)
    b.add_cost("imbalance", surplus, pen.imbalance_surplus)
    b.add_cost("ies_shortage", short, pen.reserve_shortage)
    return b, ix


def _check_horizon(spec: SystemSpec) -> None:
    if spec.horizon_h < 2:
        raise ValueError(f"horizon must be at least 2 hours, got {spec.horizon_h}")


def build_baseline_lp(spec: SystemSpec, *, storage_reserve: bool = True) -> LinearProgram:
    """Existing fleet only: no retirement, every investment variable fixed at 0."""
    _check_horizon(spec)
    b, ix = _operational(
        spec, invest_open=False, retire=frozenset(), ldes_power=0.0, storage_reserve=storage_reserve
    )
    return b.build(meta={"mode": "baseline", "index": ix, "state": spec.state})


def build_replacement_lp(
    spec: SystemSpec,
    x_power_mw: float,
    *,
    retire: frozenset[str] = THERMAL,
    storage_reserve: bool = True,
) -> LinearProgram:
    """Least-cost system after retirement with an LDES of fixed power at no charge.

    ``x_power_mw = 0`` drops the LDES entirely (the no-LDES replacement).
    """
    _check_horizon(spec)
    if not (x_power_mw >= 0 and math.isfinite(x_power_mw)):
        raise ValueError(f"x_power_mw must be finite and >= 0, got {x_power_mw}")
    b, ix = _operational(
        spec, invest_open=True, retire=frozenset(retire), ldes_power=x_power_mw,
        storage_reserve=storage_reserve,
    )
    return b.build(meta={
        "mode": "replacement", "index": ix, "state": spec.state, "x_power_mw": float(x_power_mw),
    })


def over_cost_weight(x_power_mw: float) -> float:
    return (1.0 + OVER_EPSILON) / x_power_mw


def build_opportunity_lp(
    spec: SystemSpec, mode: ModelMode, *, storage_reserve: bool = True
) -> LinearProgram:
    if mode.mode != "opportunity":
        raise ValueError("build_opportunity_lp needs an opportunity ModelMode")
    _check_horizon(spec)
    b, ix = _operational(
        spec, invest_open=True, retire=frozenset(mode.retire_technologies),
        ldes_power=mode.x_power_mw, storage_reserve=storage_reserve,
    )
    cvc = b.add_var("c_vc", -math.inf, math.inf)
    qover = b.add_var("q_over", 0.0, math.inf)
    cost, constant = b.cost_vector()
    nz = np.flatnonzero(cost)
    b.add_row(
        "viability",
        np.concatenate([nz, [cvc, qover]]),
        np.concatenate([cost[nz], [mode.x_power_mw, -1.0]]),
        LE,
        mode.q_star - constant,
    )
    obj = np.zeros(b.n)
    obj[cvc] = 1.0
    obj[qover] = -over_cost_weight(mode.x_power_mw)
    return b.build(obj, sense="maximize", meta={
        "mode": "opportunity", "index": ix, "state": spec.state,
        "x_power_mw": float(mode.x_power_mw), "q_star": float(mode.q_star),
        "c_vc": cvc, "q_over": qover,
    })


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Cost decomposition in $. ``total`` sums the cost terms and ``ldes_term``;
    ``q_over`` is reported alongside but is not a cost."""

    inv_gen: float = 0.0
    inv_st_short: float = 0.0
    ope_gen: float = 0.0
    ies_gen: float = 0.0
    imbalance: float = 0.0
    ies_shortage: float = 0.0
    fom_gen: float = 0.0
    fom_st_short: float = 0.0
    ldes_term: float = 0.0
    q_over: float = 0.0
    total: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @property
    def cost_terms(self) -> dict[str, float]:
        return {t: float(getattr(self, t)) for t in COST_TERMS}


def breakdown(lp: LinearProgram, primal, tol: float = 1e-6) -> ObjectiveBreakdown:
    """Per-term cost decomposition of a feasible point of ``lp``."""
    x = lp.to_vector(primal)
    worst = scaled_residual(lp, x)
    if worst > tol:
        raise ConsistencyError("primal is not feasible for this program", verify(lp, x).worst)
    vals = {t: lp.terms[t].evaluate(x) for t in COST_TERMS}
    ldes_term = q_over = 0.0
    if lp.meta.get("mode") == "opportunity":
        ldes_term = float(x[lp.meta["c_vc"]] * lp.meta["x_power_mw"])
        q_over = float(x[lp.meta["q_over"]])
    total = math.fsum(vals.values()) + ldes_term
    return ObjectiveBreakdown(**vals, ldes_term=ldes_term, q_over=q_over, total=total)


@dataclass
class DispatchSolution:
    """Hourly primal decisions extracted from a solved program."""

    generation: dict[str, np.ndarray]
    reserve: dict[str, np.ndarray]
    charge: dict[str, np.ndarray]
    discharge: dict[str, np.ndarray]
    soc: dict[str, np.ndarray]
    storage_power: dict[str, float]
    shed: np.ndarray
    surplus: np.ndarray
    reserve_shortage: np.ndarray
    investments: dict[str, float]

    def simultaneous_charge_discharge(self, rel_tol: float = 1e-6) -> dict[str, int]:
        """Hours per storage where both charge and discharge are material."""
        out = {}
        for sid, c in self.charge.items():
            thr = rel_tol * max(self.storage_power.get(sid, 0.0), 1.0)
            n = int(np.sum((c > thr) & (self.discharge[sid] > thr)))
            if n:
                out[sid] = n
        return out


def extract_dispatch(lp: LinearProgram, x: np.ndarray) -> DispatchSolution:
    ix: LPIndex = lp.meta["index"]
    pos = lambda a: np.maximum(x[a], 0.0)  # noqa: E731 - clip solver round-off below 0
    power = dict(ix.st_power)
    for sid, j in ix.st_x.items():
        power[sid] = max(float(x[j]), 0.0)
    inv = {gid: max(float(x[j]), 0.0) for gid, j in ix.gen_x.items()}
    inv.update({sid: max(float(x[j]), 0.0) for sid, j in ix.st_x.items()})
    return DispatchSolution(
        generation={k: pos(v) for k, v in ix.gen_p.items()},
        reserve={**{k: pos(v) for k, v in ix.gen_r.items()}, **{k: pos(v) for k, v in ix.st_r.items()}},
        charge={k: pos(v) for k, v in ix.st_c.items()},
        discharge={k: pos(v) for k, v in ix.st_d.items()},
        soc={k: pos(v) for k, v in ix.st_soc.items()},
        storage_power=power,
        shed=pos(ix.shed),
        surplus=pos(ix.surplus),
        reserve_shortage=pos(ix.shortage),
        investments=inv,
    )
