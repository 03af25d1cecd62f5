from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from ..lp import EQ, GE, LE, LinearProgram


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class Tolerances:
    """Relative feasibility / optimality targets handed to a backend."""

    feasibility: float = 1e-9
    optimality: float = 1e-9

    def __post_init__(self) -> None:
        if not (self.feasibility > 0 and self.optimality > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Limits:
    iterations: int = 500
    seconds: float = math.inf


@dataclass(frozen=True)
class ResidualReport:
    max_constraint_residual: float
    max_bound_violation: float

    @property
    def worst(self) -> float:
        return max(self.max_constraint_residual, self.max_bound_violation)


@dataclass(eq=False)
class SolveResult:
    status: Status
    objective: float
    x: np.ndarray
    names: list[str]
    max_primal_residual: float
    solve_time: float
    backend: str
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @cached_property
    def primal(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.x)}


def row_activity(lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    return lp.A @ x


def verify(lp: LinearProgram, primal) -> ResidualReport:
    """Absolute row and bound violations of ``primal``, evaluated row by row."""
    x = lp.to_vector(primal)
    act = row_activity(lp, x)
    viol = np.zeros(lp.num_constraints)
    s = lp.senses
    viol[s == LE] = np.maximum(act[s == LE] - lp.rhs[s == LE], 0.0)
    viol[s == GE] = np.maximum(lp.rhs[s == GE] - act[s == GE], 0.0)
    viol[s == EQ] = np.abs(act[s == EQ] - lp.rhs[s == EQ])
    bnd = np.maximum(np.maximum(lp.lower - x, x - lp.upper), 0.0) if x.size else np.zeros(0)
    return ResidualReport(
        float(viol.max(initial=0.0)),
        float(bnd.max(initial=0.0)),
    )


def scaled_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Worst violation relative to ``1 + |rhs|`` (rows) or ``1 + |bound|``."""
    act = lp.A @ x
    s = lp.senses
    viol = np.zeros(lp.num_constraints)
    viol[s == LE] = np.maximum(act[s == LE] - lp.rhs[s == LE], 0.0)
    viol[s == GE] = np.maximum(lp.rhs[s == GE] - act[s == GE], 0.0)
    viol[s == EQ] = np.abs(act[s == EQ] - lp.rhs[s == EQ])
    rows = viol / (1.0 + np.abs(lp.rhs))
    with np.errstate(invalid="ignore"):
        lo = np.where(np.isfinite(lp.lower), np.maximum(lp.lower - x, 0.0) / (1.0 + np.abs(lp.lower)), 0.0)
        up = np.where(np.isfinite(lp.upper), np.maximum(x - lp.upper, 0.0) / (1.0 + np.abs(lp.upper)), 0.0)
    return float(max(rows.max(initial=0.0), lo.max(initial=0.0), up.max(initial=0.0)))
