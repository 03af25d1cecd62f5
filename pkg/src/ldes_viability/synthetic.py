"""Synthetic systems for tests, benchmarks and examples.

Nothing here claims realism beyond plausible shapes: a daily load cycle,
solar that follows the sun, autocorrelated wind. Fixed costs are given per
year and prorated to the horizon so that short runs keep a sensible balance
between operating and fixed cost.
"""

from __future__ import annotations

import numpy as np

from .model import HOURS_PER_YEAR, GeneratorAsset, PenaltyPrices, StorageAsset, SystemSpec

PER_KW = 1000.0  # $/kW -> $/MW


def _solar(hours: np.ndarray, rng: np.random.Generator, season_amp: float) -> np.ndarray:
    tod = hours % 24
    sun = np.clip(np.sin(np.pi * (tod - 6) / 12), 0, None)
    # stronger in the middle of the year
    seasonal = 1 + season_amp * np.sin(2 * np.pi * (hours / HOURS_PER_YEAR - 0.2))
    clouds = np.repeat(rng.uniform(0.5, 1.0, size=len(hours) // 24 + 1), 24)[: len(hours)]
    return np.clip(0.9 * sun * seasonal * clouds, 0, 1)


def _wind(n: int, rng: np.random.Generator, mean: float) -> np.ndarray:
    z = np.zeros(n)
    eps = rng.normal(0, 0.25, n)
    for t in range(1, n):
        z[t] = 0.95 * z[t - 1] + eps[t]
    return np.clip(mean + 0.3 * z, 0, 1)


def synthetic_state(
    state: str = "SY",
    horizon_h: int = 168,
    *,
    seed: int = 0,
    peak_load_mw: float = 1000.0,
    n_gas: int = 3,
    n_coal: int = 1,
    nuclear_mw: float = 0.0,
    solar_mw: float = 600.0,
    wind_mw: float = 800.0,
    sdes_mw: float = 50.0,
    phs_mw: float = 0.0,
    wind_mean_cf: float = 0.35,
    solar_season_amp: float = 0.3,
    thermal_margin: float = 1.15,
    reserve_fraction: float = 0.04,
    gas_cost: tuple[float, float] = (70.0, 110.0),
    solar_invest_per_kw: float = 30.0,
    wind_invest_per_kw: float = 40.0,
    prorate: bool = True,
) -> SystemSpec:
    """One state with gas, coal, optional nuclear, solar, wind and batteries.

    Thermal capacity is sized so that thermal plus nuclear covers
    ``thermal_margin`` times peak load. Assets are split across two
    balancing areas.
    """
    rng = np.random.default_rng(seed)
    hours = np.arange(horizon_h)
    daily = 1 + 0.15 * np.sin(2 * np.pi * (hours % 24 - 9) / 24)
    yearly = 1 + 0.1 * np.cos(2 * np.pi * hours / HOURS_PER_YEAR)
    load = 0.8 * peak_load_mw * daily * yearly * rng.uniform(0.97, 1.03, horizon_h)
    load = np.round(load, 6)
    f = horizon_h / HOURS_PER_YEAR if prorate else 1.0

    gens: list[GeneratorAsset] = []
    profiles: dict[str, np.ndarray] = {}
    firm_need = max(thermal_margin * load.max() - nuclear_mw, 0.0)
    n_th = n_gas + n_coal
    for i in range(n_th):
        tech = "gas" if i < n_gas else "coal"
        share = firm_need / n_th if n_th else 0.0
        gens.append(GeneratorAsset(
            id=f"{state}-{tech}{i}",
            balancing_area=f"{state}-BA{i % 2}",
            technology=tech,
            capacity_mw=round(share * rng.uniform(0.8, 1.2), 3),
            variable_cost=round(float(rng.uniform(*gas_cost) if tech == "gas" else rng.uniform(25, 35)), 3),
            fom_cost=round((20 if tech == "gas" else 45) * PER_KW * f, 6),
            ramp_rate=0.5 if tech == "coal" else 1.0,
            state=state,
        ))
    if nuclear_mw > 0:
        gens.append(GeneratorAsset(
            id=f"{state}-nuc", balancing_area=f"{state}-BA0", technology="nuclear",
            capacity_mw=nuclear_mw, variable_cost=10.0, fom_cost=round(120 * PER_KW * f, 6),
            ramp_rate=0.2, state=state,
        ))
    if solar_mw > 0:
        gid = f"{state}-solar"
        gens.append(GeneratorAsset(
            id=gid, balancing_area=f"{state}-BA0", technology="solar", capacity_mw=solar_mw,
            variable_cost=0.0, fom_cost=round(15 * PER_KW * f, 6), state=state,
        ))
        profiles[gid] = np.round(_solar(hours, rng, solar_season_amp), 6)
    if wind_mw > 0:
        gid = f"{state}-wind"
        gens.append(GeneratorAsset(
            id=gid, balancing_area=f"{state}-BA1", technology="wind_ons", capacity_mw=wind_mw,
            variable_cost=0.0, fom_cost=round(30 * PER_KW * f, 6), state=state,
        ))
        profiles[gid] = np.round(_wind(horizon_h, rng, wind_mean_cf), 6)

    storages: list[StorageAsset] = []
    if sdes_mw > 0:
        storages.append(StorageAsset(
            id=f"{state}-bat", state=state, kind="sdes_existing", duration_h=2.0, power_mw=sdes_mw,
            rte=0.85, fom_cost=round(10 * PER_KW * f, 6),
        ))
    if phs_mw > 0:
        storages.append(StorageAsset(
            id=f"{state}-phs", state=state, kind="phs", duration_h=10.0, power_mw=phs_mw,
            rte=0.8, fom_cost=round(15 * PER_KW * f, 6),
        ))
    costs = {}
    for g in gens:
        if g.technology == "solar":
            costs[g.id] = round(solar_invest_per_kw * PER_KW * f, 6)
        elif g.technology == "wind_ons":
            costs[g.id] = round(wind_invest_per_kw * PER_KW * f, 6)
    for s in storages:
        if s.kind == "sdes_existing":
            costs[s.id] = round(70 * PER_KW * f, 6)
    return SystemSpec(
        state=state,
        horizon_h=horizon_h,
        load=load,
        generators=tuple(gens),
        storages=tuple(storages),
        cf_profiles=profiles,
        reserve_fraction=reserve_fraction,
        penalty_prices=PenaltyPrices(),
        candidate_costs=costs,
    )


def random_instance(seed: int, max_hours: int = 24) -> SystemSpec:
    """Small random system: T <= max_hours, <= 3 generators, <= 2 storages (before candidates)."""
    rng = np.random.default_rng(seed)
    H = int(rng.integers(2, max_hours + 1))
    load = np.round(rng.uniform(20, 100, H), 4)
    n_gen = int(rng.integers(1, 4))
    gens, profiles, costs = [], {}, {}
    techs = rng.choice(["gas", "coal", "nuclear", "solar", "wind_ons"], size=n_gen)
    for i, tech in enumerate(techs):
        gid = f"g{i}"
        ies = tech in ("solar", "wind_ons")
        gens.append(GeneratorAsset(
            id=gid, balancing_area="A", technology=str(tech),
            capacity_mw=round(float(rng.uniform(20, 120)), 3),
            variable_cost=0.0 if ies else round(float(rng.uniform(5, 80)), 3),
            fom_cost=round(float(rng.uniform(0, 50)), 3),
            ramp_rate=1.0 if ies else round(float(rng.uniform(0.2, 1.0)), 3),
            state="RX",
        ))
        if ies:
            profiles[gid] = np.round(rng.uniform(0, 1, H), 4)
            costs[gid] = round(float(rng.uniform(5, 60)), 3)
    storages = []
    for j in range(int(rng.integers(0, 3))):
        kind = "sdes_existing" if j == 0 else "phs"
        storages.append(StorageAsset(
            id=f"s{j}", state="RX", kind=kind, duration_h=float(rng.integers(1, 9)),
            power_mw=round(float(rng.uniform(5, 40)), 3), rte=round(float(rng.uniform(0.6, 1.0)), 3),
            fom_cost=round(float(rng.uniform(0, 10)), 3),
        ))
        if kind == "sdes_existing":
            costs[f"s{j}"] = round(float(rng.uniform(5, 40)), 3)
    return SystemSpec(
        state="RX", horizon_h=H, load=load, generators=tuple(gens), storages=tuple(storages),
        cf_profiles=profiles, reserve_fraction=round(float(rng.uniform(0, 0.1)), 3),
        candidate_costs=costs,
    )


def two_season_toy(horizon_h: int = 48) -> SystemSpec:
    """Plentiful sun in the first half, none in the second: energy must be carried across."""
    half = horizon_h // 2
    cf = np.zeros(horizon_h)
    cf[:half] = 1.0
    gens = (
        GeneratorAsset("gas", "A", "gas", 10.0, 60.0, 500.0, state="TS"),
        GeneratorAsset("sun", "A", "solar", 10.0, 0.0, 0.0, state="TS"),
    )
    bat = StorageAsset("bat", "TS", "sdes_existing", 4.0, power_mw=1.0, rte=0.85)
    cal = np.where(np.arange(horizon_h) < half, 1, 0).astype(np.int8)  # spring then winter
    return SystemSpec(
        state="TS", horizon_h=horizon_h, load=np.full(horizon_h, 5.0), generators=gens,
        storages=(bat,), cf_profiles={"sun": cf}, reserve_fraction=0.0,
        candidate_costs={"sun": 20.0}, season_calendar=cal,
    )


def analytic_toy() -> SystemSpec:
    """Two hours, 1 MW of load, a gas unit and a solar candidate that only shines in hour 0.

    Optimal baseline cost is 110. With gas retired and 1 MW of lossless LDES the
    cheapest replacement is 2 MW of solar at 30, so the avoided cost is 50.
    """
    gas = GeneratorAsset("gas1", "BA1", "gas", 1.0, 50.0, 10.0, state="XX")
    sun = GeneratorAsset("sol+cand", "BA1", "solar", 0.0, 0.0, 0.0, kind="candidate",
                         max_invest_mw=100.0, invest_cost=30.0, state="XX")
    ldes = StorageAsset("XX:ldes", "XX", "ldes", 100.0, rte=1.0)
    return SystemSpec(
        state="XX", horizon_h=2, load=np.ones(2), generators=(gas, sun), storages=(ldes,),
        cf_profiles={"sol+cand": np.array([1.0, 0.0])}, reserve_fraction=0.0, expanded=True,
    )


# Seven states spanning strong to weak cases: the first three pair windy,
# gas-expensive systems; the last three pair cheap gas with scarce or costly IES.
CORPUS_PARAMS: dict[str, dict] = {
    "WA": dict(wind_mean_cf=0.48, n_gas=4, n_coal=0),
    "WB": dict(wind_mean_cf=0.5, gas_cost=(80.0, 120.0)),
    "WC": dict(wind_mean_cf=0.45, gas_cost=(90.0, 130.0)),
    "MD": dict(),
    "NA": dict(solar_mw=200.0, wind_mw=100.0, gas_cost=(30.0, 40.0), nuclear_mw=300.0),
    "NB": dict(solar_mw=150.0, wind_mw=150.0, gas_cost=(25.0, 35.0), solar_invest_per_kw=60.0,
               wind_invest_per_kw=90.0),
    "NC": dict(solar_mw=100.0, wind_mw=200.0, wind_mean_cf=0.25, gas_cost=(20.0, 30.0),
               solar_invest_per_kw=70.0, wind_invest_per_kw=100.0),
}


def synthetic_corpus(horizon_h: int = 96, seed: int = 7) -> dict[str, SystemSpec]:
    """Multi-state corpus with a wide spread of viability outcomes."""
    return {st: synthetic_state(st, horizon_h, seed=seed, **kw) for st, kw in CORPUS_PARAMS.items()}
