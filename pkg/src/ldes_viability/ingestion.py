"""Read and write the CSV input schema and the INI run configuration.

Input directory layout (one state)::

    load.csv        hour, load_mw
    generators.csv  id, ba, state, technology, capacity_mw, variable_cost_per_mwh,
                    fuel_price, heat_rate, fom_per_kw_yr, ramp_frac_per_h, kind,
                    max_invest_mw, invest_cost_per_kw_yr
    storages.csv    id, state, kind, duration_h, power_mw, rte, fom_per_kw_yr,
                    invest_cost_per_kw_yr [, max_invest_mw]
    profiles.csv    asset_id, hour, cf
    config.ini      optional

A multi-state directory holds one such directory per state.

Money in the files is $/kW-yr and is stored internally as $/MW-yr.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterator

import numpy as np

from .candidates import build_candidates
from .clustering import cluster_generators
from .errors import ConfigError, InputFileError, ValidationError
from .model import (
    INTERMITTENT,
    SEASONS,
    CandidateRules,
    GeneratorAsset,
    PenaltyPrices,
    StorageAsset,
    SystemSpec,
    season_calendar,
)

REQUIRED_FILES = ("load.csv", "generators.csv", "storages.csv", "profiles.csv")
CONFIG_FILE = "config.ini"

GEN_COLUMNS = (
    "id", "ba", "state", "technology", "capacity_mw", "variable_cost_per_mwh", "fuel_price",
    "heat_rate", "fom_per_kw_yr", "ramp_frac_per_h", "kind", "max_invest_mw", "invest_cost_per_kw_yr",
)
STORAGE_COLUMNS = (
    "id", "state", "kind", "duration_h", "power_mw", "rte", "fom_per_kw_yr", "invest_cost_per_kw_yr",
)


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    horizon_h: int | None = None
    state: str | None = None
    reserve_fraction: float = 0.04
    penalties: PenaltyPrices = field(default_factory=PenaltyPrices)
    rules: CandidateRules = field(default_factory=CandidateRules)
    season_starts: dict[str, int] | None = None
    cluster_k: int = 3
    seed: int = 0
    grid: tuple[float, ...] | None = None
    refine: int = 8
    backend: str = "ipm"


def _per_kw(text: str) -> float:
    """$/kW text to $/MW, exact for values written by ``_kw_text``."""
    return float(Decimal(text.strip()).scaleb(3))


def _kw_text(per_mw: float) -> str:
    if per_mw == 0:
        return "0"
    return format(Decimal(repr(float(per_mw))).scaleb(-3).normalize(), "f")


def _parse_map(text: str, key: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, val = part.partition(":")
        if not sep:
            raise ConfigError(f"{key}: expected name:value pairs, got {part!r}", key)
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"{key}: {val.strip()!r} is not a number", key) from None
    return out


_CONFIG_KEYS = {
    "system": {"horizon_h", "state", "reserve_fraction"},
    "penalties": {"imbalance_shed", "imbalance_surplus", "reserve_shortage", "reserve_provision_cost"},
    "candidates": {
        "ies_multiplier", "ies_multiplier_overrides", "sdes_multiplier", "sdes_duration_h", "sdes_rte",
        "ldes_duration_h", "ldes_rte", "ies_invest_cost_per_kw_yr", "sdes_invest_cost_per_kw_yr",
        "sdes_fom_per_kw_yr",
    },
    "seasons": {f"{s}_start" for s in SEASONS},
    "clustering": {"k", "seed"},
    "sweep": {"grid", "refine", "backend"},
}


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise InputFileError(path) from None
    except configparser.Error as exc:
        raise ConfigError(f"{path.name}: {exc}") from None

    for section in parser.sections():
        if section not in _CONFIG_KEYS:
            raise ConfigError(f"{path.name}: unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _CONFIG_KEYS[section]:
                raise ConfigError(f"{path.name}: unknown key {section}.{key}", f"{section}.{key}")

    def get(section: str, key: str, cast=float, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except (ValueError, InvalidOperation):
            raise ConfigError(f"{path.name}: {section}.{key} has invalid value {raw!r}",
                              f"{section}.{key}") from None

    if not parser.has_option("system", "horizon_h"):
        raise ConfigError(f"{path.name}: missing required key system.horizon_h", "system.horizon_h")
    kw = {}
    pen = {k: get("penalties", k) for k in _CONFIG_KEYS["penalties"] if parser.has_option("penalties", k)}
    rules = {}
    for key in ("ies_multiplier", "sdes_multiplier", "sdes_duration_h", "sdes_rte", "ldes_duration_h", "ldes_rte"):
        if parser.has_option("candidates", key):
            rules[key] = get("candidates", key)
    if parser.has_option("candidates", "ies_multiplier_overrides"):
        rules["ies_multiplier_overrides"] = _parse_map(
            parser.get("candidates", "ies_multiplier_overrides"), "candidates.ies_multiplier_overrides")
    if parser.has_option("candidates", "ies_invest_cost_per_kw_yr"):
        per_kw = _parse_map(parser.get("candidates", "ies_invest_cost_per_kw_yr"),
                            "candidates.ies_invest_cost_per_kw_yr")
        rules["ies_invest_cost"] = {k: v * 1000.0 for k, v in per_kw.items()}
    if parser.has_option("candidates", "sdes_invest_cost_per_kw_yr"):
        rules["sdes_invest_cost"] = get("candidates", "sdes_invest_cost_per_kw_yr", _per_kw)
    if parser.has_option("candidates", "sdes_fom_per_kw_yr"):
        rules["sdes_fom_cost"] = get("candidates", "sdes_fom_per_kw_yr", _per_kw)
    present = [s for s in SEASONS if parser.has_option("seasons", f"{s}_start")]
    if present and len(present) != len(SEASONS):
        missing = sorted(f"seasons.{s}_start" for s in SEASONS if s not in present)
        raise ConfigError(f"{path.name}: missing required key {missing[0]}", missing[0])
    if present:
        kw["season_starts"] = {s: get("seasons", f"{s}_start", int) for s in SEASONS}
    if parser.has_option("sweep", "grid"):
        kw["grid"] = get("sweep", "grid", lambda t: tuple(float(v) for v in t.split(",") if v.strip()))
    try:
        return RunConfig(
            horizon_h=get("system", "horizon_h", int),
            state=get("system", "state", str),
            reserve_fraction=get("system", "reserve_fraction", default=0.04),
            penalties=PenaltyPrices(**pen),
            rules=CandidateRules(**rules),
            cluster_k=get("clustering", "k", int, 3),
            seed=get("clustering", "seed", int, 0),
            refine=get("sweep", "refine", int, 8),
            backend=get("sweep", "backend", str, "ipm"),
            **kw,
        )
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(f"{path.name}: {exc}") from None


# --------------------------------------------------------------------------
# CSV reading


def _rows(path: Path, required: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    """Yield ``(line_number, row)``; the header is line 1."""
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except FileNotFoundError:
        raise InputFileError(path) from None
    except OSError as exc:
        raise InputFileError(path, f"unreadable ({exc.strerror})") from None
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in reader.fieldnames or []]
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"{path.name}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        for row in reader:
            if not any((v or "").strip() for v in row.values()):
                continue
            yield reader.line_num, {k: (v or "").strip() for k, v in row.items() if k is not None}


class _Row:
    def __init__(self, fname: str, line: int, data: dict[str, str]) -> None:
        self.where = f"{fname} line {line}"
        self.data = data

    def text(self, col: str, default: str | None = None) -> str:
        val = self.data.get(col, "")
        if val == "":
            if default is None:
                raise ValidationError(f"{self.where}: {col} is empty")
            return default
        return val

    def num(self, col: str, default: float | None = None, per_kw: bool = False) -> float:
        raw = self.data.get(col, "")
        if raw == "":
            if default is None:
                raise ValidationError(f"{self.where}: {col} is empty")
            return default
        try:
            val = _per_kw(raw) if per_kw else float(raw)
        except (ValueError, InvalidOperation):
            raise ValidationError(f"{self.where}: {col} is not a number: {raw!r}") from None
        if not math.isfinite(val):
            raise ValidationError(f"{self.where}: {col} must be finite")
        return val

    def error(self, exc: Exception) -> ValidationError:
        msg = str(exc)
        return ValidationError(msg if msg.startswith(self.where) else f"{self.where}: {msg}")

    def hour(self, col: str = "hour") -> int:
        val = self.num(col)
        if val != int(val) or val < 0:
            raise ValidationError(f"{self.where}: {col} must be a non-negative integer, got {val}")
        return int(val)


def _read(path: Path, required: tuple[str, ...]) -> Iterator[_Row]:
    for line, data in _rows(path, required):
        yield _Row(path.name, line, data)


def _series(values: dict[int, float], horizon: int, what: str) -> np.ndarray:
    if len(values) != horizon or set(values) != set(range(horizon)):
        raise ValidationError(f"{what} has {len(values)} values, horizon is {horizon}")
    return np.array([values[h] for h in range(horizon)], dtype=float)


def load_system(input_dir: str | Path, config: RunConfig | None = None) -> SystemSpec:
    """Read one state's directory into a validated SystemSpec.

    ``config`` defaults to ``config.ini`` in the directory when present.
    The result holds the raw fleet: no clustering, no candidates (see
    ``prepare_system``), unless the files already list candidate rows.
    """
    d = Path(input_dir)
    if not d.is_dir():
        raise InputFileError(d, "missing input directory")
    for name in REQUIRED_FILES:
        if not (d / name).is_file():
            raise InputFileError(d / name)
    if config is None:
        config = load_config(d / CONFIG_FILE) if (d / CONFIG_FILE).is_file() else RunConfig()

    load: dict[int, float] = {}
    for r in _read(d / "load.csv", ("hour", "load_mw")):
        h = r.hour()
        if h in load:
            raise ValidationError(f"{r.where}: duplicate hour {h}")
        val = r.num("load_mw")
        if val < 0:
            raise ValidationError(f"{r.where}: load_mw must be >= 0")
        load[h] = val
    horizon = config.horizon_h if config.horizon_h is not None else len(load)
    load_arr = _series(load, horizon, "load.csv")

    states: set[str] = set()
    gens: list[GeneratorAsset] = []
    cand_costs: dict[str, float] = {}
    expanded = False
    for r in _read(d / "generators.csv", GEN_COLUMNS[:5]):
        states.add(r.text("state"))
        kind = r.text("kind", "existing")
        invest = r.num("invest_cost_per_kw_yr", 0.0, per_kw=True)
        # heat rate x fuel price folds into the single marginal cost
        var_cost = r.num("heat_rate", 0.0) * r.num("fuel_price", 0.0) + r.num("variable_cost_per_mwh", 0.0)
        try:
            g = GeneratorAsset(
                id=r.text("id"),
                balancing_area=r.text("ba"),
                technology=r.text("technology"),
                capacity_mw=r.num("capacity_mw"),
                variable_cost=var_cost,
                fom_cost=r.num("fom_per_kw_yr", 0.0, per_kw=True),
                ramp_rate=r.num("ramp_frac_per_h", 1.0),
                kind=kind,
                max_invest_mw=r.num("max_invest_mw", 0.0),
                invest_cost=invest if kind == "candidate" else 0.0,
                state=r.text("state"),
            )
        except ValidationError as exc:
            raise r.error(exc) from None
        if kind == "existing" and invest > 0:
            if g.technology not in INTERMITTENT:
                raise ValidationError(f"{r.where}: investment cost on a non-intermittent existing unit")
            cand_costs[g.id] = invest
        expanded |= g.is_candidate
        gens.append(g)

    stores: list[StorageAsset] = []
    for r in _read(d / "storages.csv", STORAGE_COLUMNS[:4]):
        states.add(r.text("state"))
        kind = r.text("kind")
        invest = r.num("invest_cost_per_kw_yr", 0.0, per_kw=True)
        try:
            s = StorageAsset(
                id=r.text("id"),
                state=r.text("state"),
                kind=kind,
                duration_h=r.num("duration_h"),
                power_mw=r.num("power_mw", 0.0),
                max_invest_mw=r.num("max_invest_mw", 0.0),
                rte=r.num("rte", 1.0),
                fom_cost=r.num("fom_per_kw_yr", 0.0, per_kw=True),
                invest_cost=invest if kind == "sdes_candidate" else 0.0,
            )
        except ValidationError as exc:
            raise r.error(exc) from None
        if kind == "sdes_existing" and invest > 0:
            cand_costs[s.id] = invest
        elif kind in ("phs", "ldes") and invest > 0:
            raise ValidationError(f"{r.where}: investment cost is not used for {kind}")
        expanded |= kind in ("sdes_candidate", "ldes")
        stores.append(s)

    if len(states) > 1:
        raise ValidationError(f"{d.name}: rows span several states {sorted(states)}; use one directory per state")
    if config.state and states and config.state not in states:
        raise ValidationError(f"{d.name}: config names state {config.state} but rows say {states.pop()}")
    state = config.state or next(iter(states), d.name)

    gen_ids = {g.id for g in gens}
    raw: dict[str, dict[int, float]] = {}
    for r in _read(d / "profiles.csv", ("asset_id", "hour", "cf")):
        aid = r.text("asset_id")
        if aid not in gen_ids:
            raise ValidationError(f"{r.where}: profile for unknown asset {aid}")
        h, cf = r.hour(), r.num("cf")
        if not 0 <= cf <= 1:
            raise ValidationError(f"{r.where}: capacity factor {cf} for {aid} outside [0, 1]")
        prof = raw.setdefault(aid, {})
        if h in prof:
            raise ValidationError(f"{r.where}: duplicate hour {h} for {aid}")
        prof[h] = cf
    profiles = {aid: _series(vals, horizon, f"profile {aid}") for aid, vals in raw.items()}

    cal = None
    if config.season_starts is not None:
        cal = season_calendar(horizon, config.season_starts)
    return SystemSpec(
        state=state,
        horizon_h=horizon,
        load=load_arr,
        generators=tuple(gens),
        storages=tuple(stores),
        cf_profiles=profiles,
        reserve_fraction=config.reserve_fraction,
        penalty_prices=config.penalties,
        season_calendar=cal,
        candidate_costs=cand_costs,
        expanded=expanded,
    )


def prepare_system(spec: SystemSpec, config: RunConfig | None = None) -> SystemSpec:
    """Cluster the firm fleet and add candidates; an expanded spec passes through."""
    config = config or RunConfig()
    if spec.expanded:
        return spec
    gens = cluster_generators(spec.generators, config.cluster_k, config.seed)
    return build_candidates(spec.replace(generators=tuple(gens)), config.rules)


def state_dirs(input_dir: str | Path) -> list[Path]:
    """State directories below ``input_dir``; the directory itself if it is one."""
    d = Path(input_dir)
    if not d.is_dir():
        raise InputFileError(d, "missing input directory")
    if (d / "load.csv").is_file():
        return [d]
    subs = sorted(p for p in d.iterdir() if p.is_dir() and (p / "load.csv").is_file())
    if not subs:
        raise InputFileError(d / "load.csv")
    return subs


def find_config(input_dir: str | Path, state_dir: Path) -> RunConfig | None:
    """Nearest config.ini: the state's own, else one shared at the top level."""
    for p in (state_dir / CONFIG_FILE, Path(input_dir) / CONFIG_FILE):
        if p.is_file():
            return load_config(p)
    return None


# --------------------------------------------------------------------------
# writing


def _calendar_starts(cal: np.ndarray) -> dict[str, int] | None:
    """Season start hours if ``cal`` has one contiguous (wrapping) run per season."""
    H = cal.size
    starts = {}
    for h in range(H):
        if cal[h] != cal[h - 1] or H == 1:
            name = SEASONS[int(cal[h])]
            if name in starts:
                return None
            starts[name] = h
    if set(starts) != set(SEASONS):
        return None
    return starts


def write_system(spec: SystemSpec, out_dir: str | Path) -> Path:
    """Write ``spec`` in the input schema such that ``load_system`` rebuilds it exactly."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "load.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["hour", "load_mw"])
        w.writerows((h, repr(float(v))) for h, v in enumerate(spec.load))
    with open(d / "generators.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(GEN_COLUMNS)
        for g in spec.generators:
            invest = g.invest_cost if g.is_candidate else spec.candidate_costs.get(g.id, 0.0)
            w.writerow([
                g.id, g.balancing_area, g.state or spec.state, g.technology, repr(g.capacity_mw),
                repr(g.variable_cost), "", "", _kw_text(g.fom_cost), repr(g.ramp_rate), g.kind,
                repr(g.max_invest_mw), _kw_text(invest),
            ])
    with open(d / "storages.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(STORAGE_COLUMNS + ("max_invest_mw",))
        for s in spec.storages:
            invest = s.invest_cost if s.kind == "sdes_candidate" else spec.candidate_costs.get(s.id, 0.0)
            w.writerow([
                s.id, s.state, s.kind, repr(s.duration_h), repr(s.power_mw), repr(s.rte),
                _kw_text(s.fom_cost), _kw_text(invest), repr(s.max_invest_mw),
            ])
    with open(d / "profiles.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["asset_id", "hour", "cf"])
        for aid, prof in spec.cf_profiles.items():
            w.writerows((aid, h, repr(float(v))) for h, v in enumerate(prof))

    cp = configparser.ConfigParser(interpolation=None)
    cp["system"] = {
        "horizon_h": str(spec.horizon_h),
        "state": spec.state,
        "reserve_fraction": repr(spec.reserve_fraction),
    }
    pen = spec.penalty_prices
    cp["penalties"] = {
        "imbalance_shed": repr(pen.imbalance_shed),
        "imbalance_surplus": repr(pen.imbalance_surplus),
        "reserve_shortage": repr(pen.reserve_shortage),
        "reserve_provision_cost": repr(pen.reserve_provision_cost),
    }
    if not np.array_equal(spec.season_calendar, season_calendar(spec.horizon_h)):
        starts = _calendar_starts(spec.season_calendar)
        if starts is None:
            raise ValidationError("season calendar is not four contiguous seasons; cannot be written")
        cp["seasons"] = {f"{s}_start": str(h) for s, h in starts.items()}
    with open(d / CONFIG_FILE, "w", encoding="utf-8") as fh:
        cp.write(fh)
    return d

