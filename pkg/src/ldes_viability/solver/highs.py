"""HiGHS (through scipy) as an independent second backend."""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.optimize import linprog

from ..lp import EQ, GE, LE, LinearProgram
from .base import Limits, SolveResult, Status, Tolerances, scaled_residual

_STATUS = {
    0: Status.OPTIMAL,
    1: Status.ITERATION_LIMIT,
    2: Status.INFEASIBLE,
    3: Status.UNBOUNDED,
}


def solve_highs(lp: LinearProgram, tol: Tolerances, limits: Limits) -> SolveResult:
    t0 = time.perf_counter()
    sign = -1.0 if lp.sense == "maximize" else 1.0
    A = lp.A
    le, ge, eq = lp.senses == LE, lp.senses == GE, lp.senses == EQ
    A_ub = A[le | ge]
    b_ub = lp.rhs[le | ge].copy()
    flip = np.where(ge[le | ge], -1.0, 1.0)
    A_ub = A_ub.multiply(flip[:, None]).tocsr() if A_ub.shape[0] else None
    b_ub = b_ub * flip if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.rhs[eq] if eq.any() else None
    bounds = np.column_stack([
        np.where(np.isfinite(lp.lower), lp.lower, -np.inf),
        np.where(np.isfinite(lp.upper), lp.upper, np.inf),
    ]) if lp.num_variables else None
    options = {
        "primal_feasibility_tolerance": max(tol.feasibility, 1e-10),
        "dual_feasibility_tolerance": max(tol.optimality, 1e-10),
        "presolve": True,
    }
    if math.isfinite(limits.seconds):
        options["time_limit"] = float(limits.seconds)
    if lp.num_variables == 0:
        return SolveResult(Status.OPTIMAL, lp.objective_constant, np.zeros(0), [], 0.0,
                           time.perf_counter() - t0, "highs")
    res = linprog(
        sign * lp.cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=bounds, method="highs", options=options,
    )
    status = _STATUS.get(res.status, Status.ITERATION_LIMIT)
    if status is Status.OPTIMAL:
        x = np.asarray(res.x, dtype=float)
        obj = lp.objective_value(x)
        resid = scaled_residual(lp, x)
    else:
        x = np.full(lp.num_variables, np.nan)
        obj = math.nan
        resid = math.inf
    return SolveResult(
        status=status,
        objective=obj,
        x=x,
        names=lp.names,
        max_primal_residual=resid,
        solve_time=time.perf_counter() - t0,
        backend="highs",
        iterations=int(getattr(res, "nit", 0) or 0),
        info={"message": res.message},
    )
