"""Viability cost of long-duration energy storage (LDES) for state power systems.

Typical use::

    spec = prepare_system(load_system("inputs/ND"))
    base = run_baseline(spec)
    curve = sweep_curve(spec, default_grid(), base.q_star)
    max_viability(curve)
"""

__version__ = "0.1.0"

from .analytics import (
    StateMetrics,
    StateResult,
    classify_threshold,
    compute_state_metrics,
    histogram,
    national_rollup,
    seasonal_ies_availability,
    seasonal_soc_diff,
)
from .candidates import build_candidates, with_ldes
from .clustering import cluster_generators, kmeans_1d
from .errors import (
    AlreadyExpandedError,
    ConfigError,
    ConsistencyError,
    InputFileError,
    LdesError,
    SolveError,
    ValidationError,
)
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
from .ingestion import RunConfig, load_config, load_system, prepare_system, write_system
from .lp import LinearProgram, read_mps, write_mps
from .model import (
    CandidateRules,
    GeneratorAsset,
    PenaltyPrices,
    StorageAsset,
    SystemSpec,
    season_calendar,
)
from .solver import Tolerances, solve, verify
from .sweep import (
    BaselineResult,
    MaxViability,
    ViabilityCurve,
    ViabilityPoint,
    alpha_ratio,
    curve_report,
    default_grid,
    max_viability,
    min_viable_capacity,
    run_baseline,
    sweep_curve,
    viability_at,
)

__all__ = [name for name in dir() if not name.startswith("_")]
