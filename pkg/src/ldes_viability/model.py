"""Domain types: generator and storage assets, one state's system, candidate rules."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

TECHNOLOGIES = ("gas", "coal", "nuclear", "hydro", "solar", "wind_ons", "wind_ofs", "other")
INTERMITTENT = frozenset({"solar", "wind_ons", "wind_ofs"})
THERMAL = frozenset({"gas", "coal"})
WIND = frozenset({"wind_ons", "wind_ofs"})
GENERATOR_KINDS = ("existing", "candidate")
STORAGE_KINDS = ("sdes_existing", "phs", "sdes_candidate", "ldes")

SEASONS = ("winter", "spring", "summer", "fall")
HOURS_PER_YEAR = 8760
# first hour of Mar 1, Jun 1, Sep 1, Dec 1 in a 365-day year
METEOROLOGICAL_STARTS = {"spring": 1416, "summer": 3624, "fall": 5832, "winter": 8016}


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


@dataclass(frozen=True)
class GeneratorAsset:
    """A generating unit or cluster. Costs are $/MWh (variable) and $/MW-yr."""

    id: str
    balancing_area: str
    technology: str
    capacity_mw: float
    variable_cost: float
    fom_cost: float
    ramp_rate: float = 1.0
    kind: str = "existing"
    max_invest_mw: float = 0.0
    invest_cost: float = 0.0
    state: str = ""

    def __post_init__(self) -> None:
        _check(bool(self.id) and not any(ch.isspace() for ch in self.id),
               f"generator id {self.id!r} must be non-empty without whitespace")
        _check(self.technology in TECHNOLOGIES,
               f"generator {self.id}: unknown technology {self.technology!r}")
        _check(self.kind in GENERATOR_KINDS, f"generator {self.id}: unknown kind {self.kind!r}")
        for name in ("capacity_mw", "variable_cost", "fom_cost", "max_invest_mw", "invest_cost", "ramp_rate"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("capacity_mw", "variable_cost", "fom_cost", "max_invest_mw", "invest_cost"):
            val = getattr(self, name)
            _check(math.isfinite(val) and val >= 0, f"generator {self.id}: {name} must be >= 0, got {val}")
        _check(0 < self.ramp_rate <= 1, f"generator {self.id}: ramp_rate must lie in (0, 1]")
        if self.kind == "existing":
            _check(self.max_invest_mw == 0 and self.invest_cost == 0,
                   f"generator {self.id}: existing assets cannot carry investment limits or costs")
        else:
            _check(self.capacity_mw == 0,
                   f"generator {self.id}: candidate capacity is an investment decision, must be 0")

    @property
    def is_intermittent(self) -> bool:
        return self.technology in INTERMITTENT

    @property
    def is_candidate(self) -> bool:
        return self.kind == "candidate"

    @property
    def is_thermal(self) -> bool:
        return self.technology in THERMAL


@dataclass(frozen=True)
class StorageAsset:
    """Storage with energy capacity fixed at ``duration_h`` times power."""

    id: str
    state: str
    kind: str
    duration_h: float
    power_mw: float = 0.0
    max_invest_mw: float = 0.0
    rte: float = 1.0
    fom_cost: float = 0.0
    invest_cost: float = 0.0

    def __post_init__(self) -> None:
        _check(bool(self.id) and not any(ch.isspace() for ch in self.id),
               f"storage id {self.id!r} must be non-empty without whitespace")
        _check(self.kind in STORAGE_KINDS, f"storage {self.id}: unknown kind {self.kind!r}")
        for name in ("duration_h", "power_mw", "max_invest_mw", "rte", "fom_cost", "invest_cost"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check(math.isfinite(self.duration_h) and self.duration_h > 0,
               f"storage {self.id}: duration_h must be > 0")
        _check(0 < self.rte <= 1, f"storage {self.id}: rte must lie in (0, 1]")
        for name in ("power_mw", "max_invest_mw", "fom_cost", "invest_cost"):
            val = getattr(self, name)
            _check(math.isfinite(val) and val >= 0, f"storage {self.id}: {name} must be >= 0, got {val}")
        if self.kind in ("sdes_existing", "phs"):
            _check(self.max_invest_mw == 0 and self.invest_cost == 0,
                   f"storage {self.id}: existing storage cannot carry investment limits or costs")
        if self.kind in ("sdes_candidate", "ldes"):
            _check(self.power_mw == 0,
                   f"storage {self.id}: {self.kind} power is decided later, power_mw must be 0")

    @property
    def energy_mwh(self) -> float:
        return self.duration_h * self.power_mw

    @property
    def efficiency(self) -> float:
        """One-way efficiency; charge and discharge each take the square root of RTE."""
        return math.sqrt(self.rte)


@dataclass(frozen=True)
class PenaltyPrices:
    """Slack prices; the three penalties must dominate every marginal cost."""

    imbalance_shed: float = 10_000.0
    imbalance_surplus: float = 500.0
    reserve_shortage: float = 5_000.0
    reserve_provision_cost: float = 0.0

    def __post_init__(self) -> None:
        for name in ("imbalance_shed", "imbalance_surplus", "reserve_shortage"):
            val = getattr(self, name)
            _check(math.isfinite(val) and val > 0, f"penalty {name} must be > 0, got {val}")
        _check(math.isfinite(self.reserve_provision_cost) and self.reserve_provision_cost >= 0,
               "reserve_provision_cost must be >= 0")

    def scaled(self, k: float) -> "PenaltyPrices":
        return PenaltyPrices(*(k * getattr(self, f.name) for f in dataclasses.fields(self)))


def _default_overrides() -> dict[str, float]:
    return {"CT": 10.0, "DE": 10.0, "PA": 10.0}


@dataclass(frozen=True)
class CandidateRules:
    ies_multiplier: float = 4.0
    ies_multiplier_overrides: Mapping[str, float] = field(default_factory=_default_overrides)
    sdes_multiplier: float = 10.0
    sdes_duration_h: float = 4.0
    sdes_rte: float = 0.85
    ldes_duration_h: float = 100.0
    ldes_rte: float = 0.425
    # fallback annualised costs, $/MW-yr, when the data carries none
    ies_invest_cost: Mapping[str, float] = field(default_factory=dict)
    sdes_invest_cost: float = 0.0
    sdes_fom_cost: float = 0.0

    def __post_init__(self) -> None:
        _check(self.ies_multiplier >= 0 and self.sdes_multiplier >= 0, "multipliers must be >= 0")
        _check(all(v >= 0 for v in self.ies_multiplier_overrides.values()),
               "multiplier overrides must be >= 0")
        _check(self.ldes_duration_h > 0 and self.sdes_duration_h > 0, "durations must be > 0")
        _check(0 < self.ldes_rte <= 1 and 0 < self.sdes_rte <= 1, "rte must lie in (0, 1]")
        unknown = set(self.ies_invest_cost) - INTERMITTENT
        _check(not unknown, f"ies_invest_cost names non-intermittent technologies {sorted(unknown)}")

    def multiplier_for(self, state: str) -> float:
        return float(self.ies_multiplier_overrides.get(state, self.ies_multiplier))


def season_calendar(horizon_h: int, starts: Mapping[str, int] | None = None) -> np.ndarray:
    """Season code (index into SEASONS) for every hour.

    ``starts`` gives the first hour of each season. Without it the
    meteorological boundaries of a 365-day year are used, scaled
    proportionally when the horizon is not 8760 hours. A season whose range
    crosses the end of the horizon wraps to hour 0.
    """
    default = starts is None
    if default:
        # floor keeps every start inside short horizons; seasons may then be empty
        starts = {s: h * horizon_h // HOURS_PER_YEAR for s, h in METEOROLOGICAL_STARTS.items()}
    missing = set(SEASONS) - set(starts)
    _check(not missing, f"season calendar lacks {sorted(missing)}")
    bounds = sorted((int(h), SEASONS.index(s)) for s, h in starts.items())
    _check(all(0 <= h < max(horizon_h, 1) for h, _ in bounds), "season start outside the horizon")
    _check(default or len({h for h, _ in bounds}) == len(bounds), "two seasons start on the same hour")
    hours = np.array([h for h, _ in bounds])
    codes = np.array([c for _, c in bounds], dtype=np.int8)
    # latest start at or before each hour; hours before the first start wrap to the last season
    pos = np.searchsorted(hours, np.arange(horizon_h), side="right") - 1
    cal = codes[pos]
    return cal


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Complete, validated input for one state. Immutable once built."""

    state: str
    horizon_h: int
    load: np.ndarray
    generators: tuple[GeneratorAsset, ...]
    storages: tuple[StorageAsset, ...]
    cf_profiles: Mapping[str, np.ndarray]
    reserve_fraction: float = 0.04
    penalty_prices: PenaltyPrices = field(default_factory=PenaltyPrices)
    season_calendar: np.ndarray | None = None
    candidate_costs: Mapping[str, float] = field(default_factory=dict)
    expanded: bool = False

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "horizon_h", int(self.horizon_h))
        set_(self, "load", _frozen(self.load))
        set_(self, "generators", tuple(self.generators))
        set_(self, "storages", tuple(self.storages))
        set_(self, "cf_profiles", {k: _frozen(v) for k, v in self.cf_profiles.items()})
        cal = self.season_calendar
        set_(self, "season_calendar",
             _frozen(season_calendar(self.horizon_h) if cal is None else cal, np.int8))
        set_(self, "candidate_costs", {k: float(v) for k, v in self.candidate_costs.items()})
        self.validate()

    def validate(self) -> None:
        H = self.horizon_h
        _check(H >= 1, f"horizon must be >= 1 hour, got {H}")
        _check(self.load.shape == (H,), f"load has {self.load.size} values, horizon is {H}")
        _check(bool(np.all(np.isfinite(self.load))) and bool(np.all(self.load >= 0)),
               "load values must be finite and >= 0")
        _check(0 <= self.reserve_fraction < 1, "reserve_fraction must lie in [0, 1)")
        ids = [g.id for g in self.generators] + [s.id for s in self.storages]
        dup = {i for i in ids if ids.count(i) > 1}
        _check(not dup, f"duplicate asset ids: {sorted(dup)}")
        for g in self.generators:
            if g.is_intermittent:
                _check(g.id in self.cf_profiles, f"intermittent asset without profile: {g.id}")
            else:
                _check(g.id not in self.cf_profiles, f"non-intermittent asset {g.id} has a profile")
        gen_ids = {g.id for g in self.generators}
        for key, prof in self.cf_profiles.items():
            _check(key in gen_ids, f"profile {key} does not match any generator")
            _check(prof.shape == (H,), f"profile {key} has {prof.size} values, horizon is {H}")
            _check(bool(np.all((prof >= 0) & (prof <= 1))), f"profile {key} has capacity factors outside [0, 1]")
        _check(self.season_calendar.shape == (H,), "season calendar must cover every hour exactly once")
        _check(bool(np.all((self.season_calendar >= 0) & (self.season_calendar < len(SEASONS)))),
               "season calendar has unknown season codes")
        _check(sum(s.kind == "ldes" for s in self.storages) <= 1, "at most one ldes asset per state")
        _check(all(v >= 0 for v in self.candidate_costs.values()), "candidate costs must be >= 0")

    # -- helpers ---------------------------------------------------------

    def replace(self, **changes) -> "SystemSpec":
        return dataclasses.replace(self, **changes)

    def cf(self, gen: GeneratorAsset) -> np.ndarray:
        if gen.is_intermittent:
            return self.cf_profiles[gen.id]
        return np.ones(self.horizon_h)

    @property
    def ldes(self) -> StorageAsset | None:
        return next((s for s in self.storages if s.kind == "ldes"), None)

    @property
    def thermal_capacity_mw(self) -> float:
        return float(sum(g.capacity_mw for g in self.generators if g.is_thermal and not g.is_candidate))

    def existing_generators(self) -> list[GeneratorAsset]:
        return [g for g in self.generators if not g.is_candidate]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SystemSpec):
            return NotImplemented
        if (
            self.state != other.state
            or self.horizon_h != other.horizon_h
            or self.generators != other.generators
            or self.storages != other.storages
            or self.reserve_fraction != other.reserve_fraction
            or self.penalty_prices != other.penalty_prices
            or dict(self.candidate_costs) != dict(other.candidate_costs)
            or self.expanded != other.expanded
            or set(self.cf_profiles) != set(other.cf_profiles)
        ):
            return False
        return (
            np.array_equal(self.load, other.load)
            and np.array_equal(self.season_calendar, other.season_calendar)
            and all(np.array_equal(v, other.cf_profiles[k]) for k, v in self.cf_profiles.items())
        )

    __hash__ = None  # type: ignore[assignment]


def scale_costs(spec: SystemSpec, k: float) -> SystemSpec:
    """Multiply every monetary input by ``k`` (used by homogeneity checks)."""
    gens = tuple(
        dataclasses.replace(g, variable_cost=g.variable_cost * k, fom_cost=g.fom_cost * k,
                            invest_cost=g.invest_cost * k)
        for g in spec.generators
    )
    sts = tuple(
        dataclasses.replace(s, fom_cost=s.fom_cost * k, invest_cost=s.invest_cost * k)
        for s in spec.storages
    )
    return spec.replace(
        generators=gens,
        storages=sts,
        penalty_prices=spec.penalty_prices.scaled(k),
        candidate_costs={i: v * k for i, v in spec.candidate_costs.items()},
    )


def technologies_present(gens: Sequence[GeneratorAsset]) -> list[str]:
    return sorted({g.technology for g in gens})
