"""Command-line entry point: ``validate`` an input directory or ``run`` the pipeline.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import click

from . import __version__
from .analytics import StateResult, compute_state_metrics, histogram, national_rollup
from .candidates import with_ldes
from .errors import SolveError, ValidationError
from .formulation import build_baseline_lp, build_replacement_lp
from .ingestion import RunConfig, find_config, load_system, prepare_system, state_dirs
from .lp import write_mps
from .model import SEASONS
from .solver import BACKENDS
from .sweep import (
    SCHEMA_VERSION,
    curve_report,
    default_grid,
    max_viability,
    run_baseline,
    sweep_curve,
    validate_grid,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVE, EXIT_IO = 0, 2, 3, 4

logger = logging.getLogger("ldes_viability")


def _finite(obj):
    """JSON has no NaN/inf; map them to null."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(path: Path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(_finite(payload), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["schema_version", *header])
        for row in rows:
            w.writerow([SCHEMA_VERSION, *("" if v is None else repr(float(v)) if isinstance(v, float) else v for v in row)])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _parse_grid(text: str | None) -> list[float] | None:
    """``"1,2,4"`` or ``"lo:hi:n"`` (log-spaced)."""
    if text is None:
        return None
    if ":" in text:
        lo, hi, n = text.split(":")
        return default_grid(float(lo), float(hi), int(n))
    return [float(v) for v in text.split(",") if v.strip()]


def _load_all(input_dir: Path, states: tuple[str, ...] | None):
    dirs = state_dirs(input_dir)
    if states:
        wanted = set(states)
        chosen = [d for d in dirs if d.name in wanted]
        if len(dirs) == 1 and not chosen:
            chosen = dirs  # single state directory: match on the state code instead
        dirs = chosen
    out = []
    for d in dirs:
        cfg = find_config(input_dir, d)
        spec = load_system(d, cfg)
        if states and spec.state not in states and d.name not in states:
            continue
        out.append((d, cfg or RunConfig(), spec))
    if states and not out:
        raise ValidationError(f"no state matches --states {','.join(states)}")
    return out


@click.group()
@click.version_option(__version__, prog_name="ldes-viability")
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def main(verbose: int) -> None:
    """Viability cost of long-duration storage for state power systems."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command()
@click.argument("input_dir", type=click.Path(path_type=Path))
def validate(input_dir: Path) -> None:
    """Load every state under INPUT_DIR and check it; no solving."""
    try:
        loaded = _load_all(input_dir, None)
        for _, cfg, spec in loaded:
            prepared = prepare_system(spec, cfg)
            build_baseline_lp(prepared)
            click.echo(f"{spec.state}: ok ({spec.horizon_h} h, {len(spec.generators)} generators, "
                       f"{len(spec.storages)} storages)")
    except ValidationError as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)


def _run_state(spec, cfg: RunConfig, opts: dict, out: Path, timings: dict, failures: list):
    """Solve one state and write its files. Returns a ``StateResult`` or None on failure."""
    state = spec.state
    t0 = time.perf_counter()
    spec = with_ldes(prepare_system(spec, cfg), opts["duration_h"], opts["rte"])
    timings[f"{state}.prepare"] = time.perf_counter() - t0
    try:
        grid = validate_grid(opts["grid"] or (list(cfg.grid) if cfg.grid else default_grid()))
    except ValueError as exc:
        raise ValidationError(f"{state}: {exc}") from None
    refine = cfg.refine if opts["refine"] is None else opts["refine"]
    backend = opts["backend"] or cfg.backend
    sdir = out / state
    sdir.mkdir(parents=True, exist_ok=True)

    if opts["export_lp"]:
        lp_dir = Path(opts["export_lp"]) / state
        lp_dir.mkdir(parents=True, exist_ok=True)
        write_mps(build_baseline_lp(spec), lp_dir / "baseline.mps", name=f"{state}_baseline")
        for x in grid:
            write_mps(build_replacement_lp(spec, x), lp_dir / f"replacement_{x:g}MW.mps", name=f"{state}_repl")

    t0 = time.perf_counter()
    try:
        base = run_baseline(spec, backend=backend)
    except SolveError as exc:
        failures.append({"state": state, "stage": exc.stage, "status": exc.status})
        click.echo(f"{state}: solve failed at stage {exc.stage} ({exc.status})", err=True)
        return None
    timings[f"{state}.baseline"] = time.perf_counter() - t0
    _dump(sdir / "baseline.json", {
        "state": state,
        "q_star": base.q_star,
        "thermal_capacity_mw": base.thermal_capacity_mw,
        "cost_terms": base.breakdown.as_dict(),
    })

    t0 = time.perf_counter()
    curve = sweep_curve(spec, grid, base.q_star, backend=backend, jobs=opts["jobs"], refine=refine, strict=False)
    timings[f"{state}.sweep"] = time.perf_counter() - t0
    for f in curve.failures:
        click.echo(f"{state}: solve failed at stage {f['stage']} ({f['status']})", err=True)
    failures.extend(curve.failures)
    _dump(sdir / "curve.json", curve_report(curve, base.thermal_capacity_mw))
    _write_csv(sdir / "curve.csv", ["x_power_mw", "c_vc_per_kw", "avoided_cost", "q_over"],
               ([p.x_power_mw, p.c_vc, p.avoided_cost, p.q_over] for p in curve.points))
    metrics = compute_state_metrics(spec, base, curve)
    _dump(sdir / "metrics.json", metrics.as_dict())
    if not curve.points:
        return None
    mv = max_viability(curve)
    point = next(p for p in curve.points if p.x_power_mw == mv.x_at_max)
    return StateResult(spec, base, point, curve.no_ldes_breakdown, curve.no_ldes_dispatch), metrics


@main.command()
@click.argument("input_dir", type=click.Path(path_type=Path))
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--states", help="Comma-separated state codes to run (default: all).")
@click.option("--grid", help="LDES capacities in MW: '1,2,4' or log-spaced 'lo:hi:n'.")
@click.option("--duration-h", type=float, help="LDES duration in hours.")
@click.option("--rte", type=float, help="LDES round-trip efficiency.")
@click.option("--seed", type=int, help="Clustering seed (overrides config).")
@click.option("--backend", help=f"LP backend ({', '.join(sorted(BACKENDS))}).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel sweep workers.")
@click.option("--refine", type=int, help="Extra capacities placed around the maximum.")
@click.option("--hist-bin", type=float, default=100.0, show_default=True, help="Histogram bin width, $/kW.")
@click.option("--export-lp", type=click.Path(path_type=Path), help="Also write the programs as MPS files here.")
def run(input_dir: Path, out_dir: Path, states, grid, duration_h, rte, seed, backend, jobs, refine,
        hist_bin, export_lp) -> None:
    """Solve the baseline and sweep LDES capacity for each state under INPUT_DIR."""
    started = time.perf_counter()
    if backend is not None and backend not in BACKENDS:
        click.echo(f"invalid input: unknown backend {backend!r}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        opts = {
            "grid": _parse_grid(grid), "duration_h": duration_h, "rte": rte, "backend": backend,
            "jobs": jobs, "refine": refine, "export_lp": export_lp,
        }
        t0 = time.perf_counter()
        loaded = _load_all(input_dir, tuple(s.strip() for s in states.split(",")) if states else None)
        timings = {"load": time.perf_counter() - t0}
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ValidationError, ValueError) as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)

    failures: list[dict] = []
    results, metrics = [], []
    effective = []
    try:
        for _, cfg, spec in loaded:
            if seed is not None:
                cfg = replace(cfg, seed=seed)
            effective.append({"state": spec.state, **_config_record(cfg)})
            got = _run_state(spec, cfg, opts, out_dir, timings, failures)
            if got is not None:
                results.append(got[0])
                metrics.append(got[1])
        rollup = national_rollup(results)
        _dump(out_dir / "rollup.json", rollup)
        _write_outputs(out_dir, metrics, hist_bin)
    except ValidationError as exc:
        click.echo(f"invalid input: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)

    timings["total"] = time.perf_counter() - started
    config_record = {
        "states": effective,
        "grid": opts["grid"],
        "duration_h": duration_h,
        "rte": rte,
        "backend": backend,
        "refine": refine,
    }
    inputs = sorted(
        p for p in Path(input_dir).rglob("*") if p.is_file() and p.suffix in (".csv", ".ini")
    )
    outputs = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {
        "tool_version": __version__,
        "python": platform.python_version(),
        "config_hash": hashlib.sha256(json.dumps(_finite(config_record), sort_keys=True).encode()).hexdigest(),
        "config": config_record,
        "seed": seed,
        "backend": backend or sorted({c.get("backend") for c in effective}),
        "jobs": jobs,
        "input_digests": {str(p.relative_to(input_dir)): _sha256(p) for p in inputs},
        "output_digests": {str(p.relative_to(out_dir)): _sha256(p) for p in outputs},
        "timings_s": timings,
        "failures": failures,
        "status": "failed" if failures else "ok",
    }
    _dump(out_dir / "manifest.json", manifest)
    if failures:
        sys.exit(EXIT_SOLVE)
    click.echo(f"wrote results for {len(results)} state(s) to {out_dir}")


def _config_record(cfg: RunConfig) -> dict:
    return asdict(cfg)


def _write_outputs(out: Path, metrics: list, hist_bin: float) -> None:
    """Cross-state CSVs: one summary row per state, the viability histogram, seasonal tables."""
    metrics = sorted(metrics, key=lambda m: m.state)
    _write_csv(out / "summary.csv",
               ["state", "c_vc_max_per_kw", "x_at_max_mw", "alpha", "thermal_participation",
                "thermal_utilization", "avg_ies_cf", "thermal_fom_share", "solar_share", "wind_share"],
               ([m.state, m.c_vc_max, m.x_at_max_mw, m.alpha, m.thermal_participation, m.thermal_utilization,
                 m.avg_ies_cf, m.thermal_fom_share, m.solar_share, m.wind_share] for m in metrics))
    bins = histogram([m.c_vc_max for m in metrics if m.c_vc_max is not None], hist_bin)
    _write_csv(out / "histogram.csv", ["bin_start", "count"], ([b["bin_start"], b["count"]] for b in bins))
    _write_csv(out / "seasonal.csv", ["state", "season", "soc_diff", "ies_avg_cf", "ies_rel_availability"],
               ([m.state, s, m.seasonal_soc_diff.get(s),
                 m.seasonal_ies_availability.get(s, {}).get("avg_cf"),
                 m.seasonal_ies_availability.get(s, {}).get("rel_availability")]
                for m in metrics for s in SEASONS))


if __name__ == "__main__":  # pragma: no cover
    main()
