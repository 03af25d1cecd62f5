"""Sparse linear program container, a vectorised builder, and free-MPS I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<", "=", ">"
_SENSES = (LE, EQ, GE)


class Variable(NamedTuple):
    name: str
    lower: float
    upper: float
    objective_coeff: float


class Constraint(NamedTuple):
    name: str
    coefficients: list[tuple[int, float]]
    sense: str
    rhs: float


@dataclass(frozen=True)
class ObjectiveTerm:
    """One named cost component: ``constant + coeffs @ x[index]``."""

    index: np.ndarray
    coeffs: np.ndarray
    constant: float = 0.0

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.constant + self.coeffs @ x[self.index])


@dataclass(eq=False)
class LinearProgram:
    """Explicit sparse LP.

    Rows are stored once as a CSR matrix; ``senses`` holds one of ``<``,
    ``=``, ``>`` per row. ``terms`` optionally decomposes a cost expression
    into named components and ``meta`` carries formulation bookkeeping that
    solvers ignore.
    """

    names: list[str]
    lower: np.ndarray
    upper: np.ndarray
    cost: np.ndarray
    row_names: list[str]
    A: sp.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    sense: str = "minimize"
    objective_constant: float = 0.0
    terms: dict[str, ObjectiveTerm] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n, m = len(self.names), len(self.row_names)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.cost = np.asarray(self.cost, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.senses = np.asarray(self.senses, dtype="<U1")
        self.A = sp.csr_matrix(self.A, dtype=float)
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"objective sense must be minimize/maximize, got {self.sense!r}")
        for label, arr, size in (
            ("lower", self.lower, n), ("upper", self.upper, n), ("cost", self.cost, n),
            ("rhs", self.rhs, m), ("senses", self.senses, m),
        ):
            if arr.shape != (size,):
                raise ValueError(f"{label} has shape {arr.shape}, expected ({size},)")
        if self.A.shape != (m, n):
            raise ValueError(f"constraint matrix is {self.A.shape}, expected {(m, n)}")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"variable {self.names[j]} has lower > upper")
        if np.isnan(self.lower).any() or np.isnan(self.upper).any():
            raise ValueError("NaN variable bound")
        if not np.all(np.isfinite(self.cost)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("objective and right-hand side must be finite")
        if not np.all(np.isfinite(self.A.data)):
            raise ValueError("non-finite constraint coefficient")
        bad = ~np.isin(self.senses, _SENSES)
        if bad.any():
            raise ValueError(f"row {self.row_names[int(np.argmax(bad))]} has invalid sense")
        if len(set(self.names)) != n:
            raise ValueError("variable names are not unique")
        if len(set(self.row_names)) != m:
            raise ValueError("constraint names are not unique")

    @property
    def num_variables(self) -> int:
        return len(self.names)

    @property
    def num_constraints(self) -> int:
        return len(self.row_names)

    @cached_property
    def variable_index(self) -> dict[str, int]:
        return {name: j for j, name in enumerate(self.names)}

    @property
    def variables(self) -> list[Variable]:
        return [
            Variable(nm, float(lo), float(up), float(c))
            for nm, lo, up, c in zip(self.names, self.lower, self.upper, self.cost)
        ]

    @property
    def constraints(self) -> list[Constraint]:
        out = []
        A = self.A
        for i, nm in enumerate(self.row_names):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            coefs = [(int(j), float(v)) for j, v in zip(A.indices[lo:hi], A.data[lo:hi])]
            out.append(Constraint(nm, coefs, str(self.senses[i]), float(self.rhs[i])))
        return out

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.cost @ x + self.objective_constant)

    def indices(self, names: Iterable[str]) -> np.ndarray:
        idx = self.variable_index
        return np.array([idx[n] for n in names], dtype=np.int64)

    def to_vector(self, primal) -> np.ndarray:
        """Accept either a full-length array or a name → value mapping."""
        if isinstance(primal, np.ndarray):
            x = np.asarray(primal, dtype=float)
            if x.shape != (self.num_variables,):
                raise ValueError(f"primal has shape {x.shape}, expected ({self.num_variables},)")
            return x
        missing = [n for n in self.names if n not in primal]
        if missing:
            raise ValueError(f"primal is missing {len(missing)} variable(s), e.g. {missing[0]!r}")
        return np.array([float(primal[n]) for n in self.names])


class LPBuilder:
    """Accumulates variables and rows in blocks, then freezes a LinearProgram."""

    def __init__(self) -> None:
        self._names: list[str] = []
        self._lower: list[np.ndarray] = []
        self._upper: list[np.ndarray] = []
        self._row_names: list[str] = []
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._senses: list[str] = []
        self._rhs: list[np.ndarray] = []
        self._term_idx: dict[str, list[np.ndarray]] = {}
        self._term_val: dict[str, list[np.ndarray]] = {}
        self._term_const: dict[str, float] = {}
        self.n = 0
        self.m = 0

    def add_vars(self, prefix: str, size: int, lower=0.0, upper=math.inf) -> np.ndarray:
        """Add ``size`` variables named ``prefix[k]``; returns their indices."""
        idx = np.arange(self.n, self.n + size)
        self._names.extend(f"{prefix}[{k}]" for k in range(size))
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), (size,)).copy())
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), (size,)).copy())
        self.n += size
        return idx

    def add_var(self, name: str, lower=0.0, upper=math.inf) -> int:
        self._names.append(name)
        self._lower.append(np.array([lower], dtype=float))
        self._upper.append(np.array([upper], dtype=float))
        self.n += 1
        return self.n - 1

    def add_rows(
        self,
        prefix: str,
        size: int,
        terms: Sequence[tuple[np.ndarray, object]],
        sense: str,
        rhs=0.0,
    ) -> np.ndarray:
        """Add ``size`` rows; each term is (column per row, coefficient scalar or per row)."""
        rows = np.arange(self.m, self.m + size)
        for cols, coef in terms:
            cols = np.asarray(cols, dtype=np.int64)
            if cols.shape != (size,):
                raise ValueError(f"{prefix}: term has {cols.shape} columns, expected ({size},)")
            self._rows.append(rows)
            self._cols.append(cols)
            self._vals.append(np.broadcast_to(np.asarray(coef, dtype=float), (size,)).copy())
        self._row_names.extend(f"{prefix}[{k}]" for k in range(size))
        self._senses.extend([sense] * size)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (size,)).copy())
        self.m += size
        return rows

    def add_row(self, name: str, cols, coefs, sense: str, rhs: float) -> int:
        cols = np.asarray(cols, dtype=np.int64)
        self._rows.append(np.full(cols.shape, self.m, dtype=np.int64))
        self._cols.append(cols)
        self._vals.append(np.broadcast_to(np.asarray(coefs, dtype=float), cols.shape).copy())
        self._row_names.append(name)
        self._senses.append(sense)
        self._rhs.append(np.array([rhs], dtype=float))
        self.m += 1
        return self.m - 1

    def add_cost(self, term: str, cols, coefs) -> None:
        cols = np.asarray(cols, dtype=np.int64).ravel()
        self._term_idx.setdefault(term, []).append(cols)
        self._term_val.setdefault(term, []).append(
            np.broadcast_to(np.asarray(coefs, dtype=float), cols.shape).copy()
        )
        self._term_const.setdefault(term, 0.0)

    def add_constant(self, term: str, value: float) -> None:
        self._term_const[term] = self._term_const.get(term, 0.0) + float(value)
        self._term_idx.setdefault(term, [])
        self._term_val.setdefault(term, [])

    def terms(self) -> dict[str, ObjectiveTerm]:
        out = {}
        for name in self._term_const:
            idx = np.concatenate(self._term_idx[name]) if self._term_idx[name] else np.zeros(0, np.int64)
            val = np.concatenate(self._term_val[name]) if self._term_val[name] else np.zeros(0)
            out[name] = ObjectiveTerm(idx, val, self._term_const[name])
        return out

    def cost_vector(self) -> tuple[np.ndarray, float]:
        """Dense sum of all registered terms and their constants."""
        c = np.zeros(self.n)
        const = 0.0
        for term in self.terms().values():
            np.add.at(c, term.index, term.coeffs)
            const += term.constant
        return c, const

    def matrix(self) -> sp.csr_matrix:
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, np.int64)
            vals = np.zeros(0)
        A = sp.coo_matrix((vals, (rows, cols)), shape=(self.m, self.n)).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        return A

    def build(self, cost=None, *, sense="minimize", constant=0.0, meta=None) -> LinearProgram:
        if cost is None:
            cost, constant = self.cost_vector()
        return LinearProgram(
            names=list(self._names),
            lower=np.concatenate(self._lower) if self._lower else np.zeros(0),
            upper=np.concatenate(self._upper) if self._upper else np.zeros(0),
            cost=np.asarray(cost, dtype=float),
            row_names=list(self._row_names),
            A=self.matrix(),
            senses=np.array(self._senses, dtype="<U1"),
            rhs=np.concatenate(self._rhs) if self._rhs else np.zeros(0),
            sense=sense,
            objective_constant=float(constant),
            terms=self.terms(),
            meta=dict(meta or {}),
        )


# --------------------------------------------------------------------------
# free-format MPS

_MPS_ROW_TYPE = {LE: "L", EQ: "E", GE: "G"}
_MPS_SENSE = {v: k for k, v in _MPS_ROW_TYPE.items()}


def _num(v: float) -> str:
    return repr(float(v))


def write_mps(lp: LinearProgram, path, name: str = "LDES") -> Path:
    """Write ``lp`` as free MPS.

    The objective constant goes on the RHS of the objective row with the
    sign flipped (the convention HiGHS, CPLEX and Gurobi share). Maximisation
    is written with an ``OBJSENSE`` section.
    """
    path = Path(path)
    A = lp.A.tocsc()
    lines = [f"NAME {name}"]
    if lp.sense == "maximize":
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(" N obj")
    for nm, s in zip(lp.row_names, lp.senses):
        lines.append(f" {_MPS_ROW_TYPE[s]} {nm}")
    lines.append("COLUMNS")
    for j, var in enumerate(lp.names):
        if lp.cost[j] != 0.0:
            lines.append(f" {var} obj {_num(lp.cost[j])}")
        for p in range(A.indptr[j], A.indptr[j + 1]):
            lines.append(f" {var} {lp.row_names[A.indices[p]]} {_num(A.data[p])}")
        if lp.cost[j] == 0.0 and A.indptr[j] == A.indptr[j + 1]:
            # keep empty columns so the variable survives a round trip
            lines.append(f" {var} obj 0.0")
    lines.append("RHS")
    if lp.objective_constant != 0.0:
        lines.append(f" rhs obj {_num(-lp.objective_constant)}")
    for nm, b in zip(lp.row_names, lp.rhs):
        if b != 0.0:
            lines.append(f" rhs {nm} {_num(b)}")
    lines.append("BOUNDS")
    for var, lo, up in zip(lp.names, lp.lower, lp.upper):
        if lo == up:
            lines.append(f" FX bnd {var} {_num(lo)}")
            continue
        if lo == -math.inf and up == math.inf:
            lines.append(f" FR bnd {var}")
            continue
        if lo == -math.inf:
            lines.append(f" MI bnd {var}")
        elif lo != 0.0:
            lines.append(f" LO bnd {var} {_num(lo)}")
        if up != math.inf:
            lines.append(f" UP bnd {var} {_num(up)}")
    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_mps(path) -> LinearProgram:
    """Parse the free-MPS subset produced by :func:`write_mps` (no RANGES)."""
    section = None
    sense = "minimize"
    obj_row = None
    row_names: list[str] = []
    row_pos: dict[str, int] = {}
    senses: list[str] = []
    col_pos: dict[str, int] = {}
    names: list[str] = []
    entries: list[tuple[int, int, float]] = []
    cost: dict[int, float] = {}
    rhs: dict[int, float] = {}
    constant = 0.0
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}

    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "OBJSENSE" and len(head) > 1:
                sense = "maximize" if head[1].upper().startswith("MAX") else "minimize"
            if section == "ENDATA":
                break
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            sense = "maximize" if tok[0].upper().startswith("MAX") else "minimize"
        elif section == "ROWS":
            kind, nm = tok
            if kind == "N":
                obj_row = obj_row or nm
                continue
            row_pos[nm] = len(row_names)
            row_names.append(nm)
            senses.append(_MPS_SENSE[kind])
        elif section == "COLUMNS":
            var = tok[0]
            if var not in col_pos:
                col_pos[var] = len(names)
                names.append(var)
            j = col_pos[var]
            for r, v in zip(tok[1::2], tok[2::2]):
                if r == obj_row:
                    cost[j] = cost.get(j, 0.0) + float(v)
                else:
                    entries.append((row_pos[r], j, float(v)))
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                if r == obj_row:
                    constant = -float(v)
                else:
                    rhs[row_pos[r]] = float(v)
        elif section == "BOUNDS":
            kind, var = tok[0], tok[2]
            j = col_pos[var]
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "FX":
                lower[j] = upper[j] = val
            elif kind == "FR":
                lower[j], upper[j] = -math.inf, math.inf
            elif kind == "MI":
                lower[j] = -math.inf
            elif kind == "LO":
                lower[j] = val
            elif kind == "UP":
                upper[j] = val
            else:
                raise ValueError(f"unsupported bound type {kind}")
        elif section == "RANGES":
            raise ValueError("RANGES section is not supported")

    n, m = len(names), len(row_names)
    r, c, v = (np.array(a) for a in zip(*entries)) if entries else (np.zeros(0, int),) * 2 + (np.zeros(0),)
    A = sp.coo_matrix((v, (r, c)), shape=(m, n)).tocsr()
    return LinearProgram(
        names=names,
        lower=np.array([lower.get(j, 0.0) for j in range(n)]),
        upper=np.array([upper.get(j, math.inf) for j in range(n)]),
        cost=np.array([cost.get(j, 0.0) for j in range(n)]),
        row_names=row_names,
        A=A,
        senses=np.array(senses, dtype="<U1"),
        rhs=np.array([rhs.get(i, 0.0) for i in range(m)]),
        sense=sense,
        objective_constant=constant,
    )
