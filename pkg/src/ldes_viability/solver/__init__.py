"""Backend-agnostic LP solving.

A backend is any callable ``(LinearProgram, Tolerances, Limits) -> SolveResult``.
``ipm`` is the bundled reference implementation; ``highs`` wraps scipy's
HiGHS interface and serves as an independent cross-check.
"""

from __future__ import annotations

from typing import Callable

from ..lp import LinearProgram
from .base import (
    Limits,
    ResidualReport,
    SolveResult,
    Status,
    Tolerances,
    scaled_residual,
    verify,
)
from .highs import solve_highs
from .ipm import solve_ipm

Backend = Callable[[LinearProgram, Tolerances, Limits], SolveResult]

BACKENDS: dict[str, Backend] = {
    "ipm": solve_ipm,
    "highs": solve_highs,
}
DEFAULT_BACKEND = "ipm"


def register_backend(name: str, backend: Backend) -> None:
    BACKENDS[name] = backend


def solve(
    lp: LinearProgram,
    tol: Tolerances | None = None,
    limits: Limits | None = None,
    backend: str = DEFAULT_BACKEND,
) -> SolveResult:
    if not isinstance(lp, LinearProgram):
        raise TypeError(f"expected LinearProgram, got {type(lp).__name__}")
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(lp, tol or Tolerances(), limits or Limits())


__all__ = [
    "BACKENDS",
    "DEFAULT_BACKEND",
    "Limits",
    "ResidualReport",
    "SolveResult",
    "Status",
    "Tolerances",
    "register_backend",
    "scaled_residual",
    "solve",
    "verify",
]
