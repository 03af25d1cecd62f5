"""Reference backend: primal-dual interior point (Mehrotra predictor-corrector).

The program is first rewritten as

    min c'x  s.t.  A x = b,  0 <= x,  x_k <= u_k for k in U

by eliminating fixed columns, shifting/reflecting bounds and adding row
slacks. Free columns stay unsplit and carry a small primal regularisation. Search directions come from the normal
equations ``A Θ Aᵀ dy = r`` factorised once per iteration with SuperLU.
When the iteration fails to converge the program is classified with two
auxiliary solves: a primal phase-I problem and, if that finds a feasible
point, a dual phase-I problem whose positive optimum certifies unboundedness.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..lp import EQ, GE, LE, LinearProgram
from .base import Limits, SolveResult, Status, Tolerances, scaled_residual

logger = logging.getLogger(__name__)

_STEP = 0.9995
_RETRY_STEPS = (_STEP, 0.99, 0.95)
_DIVERGE = 1e13
_WINDOW = 30
_RELAXED = 100.0
_REFINE = 6


@dataclass
class _Standard:
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    u: np.ndarray
    P: sp.csr_matrix  # original x = base + P @ xs[:n_struct]
    base: np.ndarray
    free: np.ndarray
    n_struct: int
    offset: float
    sign: float
    trivially: Status | None = None


def _standard_form(lp: LinearProgram, feas_tol: float) -> _Standard:
    n = lp.num_variables
    sign = -1.0 if lp.sense == "maximize" else 1.0
    lo, up = lp.lower, lp.upper
    fixed = lo == up
    has_lo = np.isfinite(lo) & ~fixed
    only_up = ~np.isfinite(lo) & np.isfinite(up)
    free = ~np.isfinite(lo) & ~np.isfinite(up)

    base = np.zeros(n)
    base[fixed] = lo[fixed]
    base[has_lo] = lo[has_lo]
    base[only_up] = up[only_up]

    # one standard column per shifted, reflected or free variable
    rows, cols, vals, ucap, fcol = [], [], [], [], []
    k = 0
    for mask, coef, is_free in ((has_lo, 1.0, False), (only_up, -1.0, False), (free, 1.0, True)):
        idx = np.flatnonzero(mask)
        rows.append(idx)
        cols.append(np.arange(k, k + idx.size))
        vals.append(np.full(idx.size, coef))
        if mask is has_lo:
            ucap.append(up[idx] - lo[idx])
        else:
            ucap.append(np.full(idx.size, np.inf))
        fcol.append(np.full(idx.size, is_free))
        k += idx.size
    n_struct = k
    P = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n_struct)
    ).tocsr()
    u_struct = np.concatenate(ucap) if ucap else np.zeros(0)

    A0 = lp.A
    b = lp.rhs - A0 @ base
    As = (A0 @ P).tocsr()
    c = sign * (P.T @ lp.cost)
    offset = sign * float(lp.cost @ base + lp.objective_constant)

    trivially = None
    nnz_row = np.diff(As.indptr)
    empty = nnz_row == 0
    if empty.any():
        s, r = lp.senses[empty], b[empty]
        scale = feas_tol * (1.0 + np.abs(lp.rhs[empty]))
        bad = ((s == EQ) & (np.abs(r) > scale)) | ((s == LE) & (r < -scale)) | ((s == GE) & (r > scale))
        if bad.any():
            trivially = Status.INFEASIBLE
    keep = ~empty
    As = As[keep]
    b = b[keep]
    senses = lp.senses[keep]

    # row slacks
    ineq = np.flatnonzero(senses != EQ)
    if ineq.size:
        S = sp.coo_matrix(
            (np.where(senses[ineq] == LE, 1.0, -1.0), (ineq, np.arange(ineq.size))),
            shape=(As.shape[0], ineq.size),
        )
        As = sp.hstack([As, S], format="csr")
    c = np.concatenate([c, np.zeros(ineq.size)])
    u = np.concatenate([u_struct, np.full(ineq.size, np.inf)])
    fmask = np.concatenate(fcol + [np.zeros(ineq.size, dtype=bool)])
    return _Standard(As, b, c, u, P, base, fmask, n_struct, offset, sign, trivially)


def _ruiz(A: sp.csr_matrix, passes: int = 8) -> tuple[np.ndarray, np.ndarray]:
    m, n = A.shape
    r = np.ones(m)
    s = np.ones(n)
    B = A.copy().tocsr()
    for _ in range(passes):
        if B.nnz == 0:
            break
        absB = abs(B)
        rmax = absB.max(axis=1).toarray().ravel()
        cmax = absB.max(axis=0).toarray().ravel()
        dr = 1.0 / np.sqrt(np.where(rmax > 0, rmax, 1.0))
        dc = 1.0 / np.sqrt(np.where(cmax > 0, cmax, 1.0))
        r *= dr
        s *= dc
        B = sp.diags(dr) @ B @ sp.diags(dc)
    return r, s


class _Factor:
    """Factorisation of the regularised augmented system.

    Solves ``[-D  Aᵀ; A  δI] [dx; dy] = [r̂; r_b]`` with ``D = Θ⁻¹``, which
    stays accurate when Θ spans many orders of magnitude near the optimum.
    """

    def __init__(self, A: sp.csr_matrix, AT: sp.csr_matrix, dinv: np.ndarray, pivot: float = 0.0) -> None:
        m, n = A.shape
        self.m, self.n = m, n
        self.preg, self.dreg = 1e-8, 1e-8
        self.K = sp.bmat(
            [[sp.diags(-dinv), AT], [A, None]], format="csc"
        )
        # the regularised system is quasi-definite, so diagonal pivots are tried
        # first (far less fill); threshold pivoting is the fallback
        self.pivot = pivot
        self._factor()

    def _factor(self) -> None:
        n, m = self.n, self.m
        for _ in range(5):
            try:
                R = sp.diags(np.concatenate([np.full(n, -self.preg), np.full(m, self.dreg)]))
                self.lu = spla.splu(
                    (self.K + R).tocsc(),
                    # symmetric ordering suits diagonal pivots; with row
                    # exchanges a column ordering keeps the fill far lower
                    permc_spec="MMD_AT_PLUS_A" if self.pivot == 0.0 else "COLAMD",
                    diag_pivot_thresh=self.pivot,
                    options={"SymmetricMode": True},
                )
                return
            except RuntimeError:
                self.preg *= 1e3
                self.dreg *= 1e3
        raise np.linalg.LinAlgError("augmented system is numerically singular")

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([r1, r2])
        sol = self.lu.solve(rhs)
        # the dual block r1 can be many orders larger than r2, so the row
        # block gets its own accuracy target
        t1 = 1e-9 * (1.0 + np.linalg.norm(r1, np.inf))
        t2 = 1e-12 * (1.0 + np.linalg.norm(r2, np.inf))
        for _ in range(_REFINE):
            res = rhs - self.K @ sol
            if (np.linalg.norm(res[: self.n], np.inf) <= t1 and np.linalg.norm(res[self.n:], np.inf) <= t2):
                break
            sol = sol + self.lu.solve(res)
        res = rhs - self.K @ sol
        if not np.all(np.isfinite(sol)) or self.pivot == 0.0 and (
            np.linalg.norm(res[: self.n], np.inf) > t1 or np.linalg.norm(res[self.n:], np.inf) > t2
        ):
            self.pivot = 0.1
            self._factor()
            return self.solve(r1, r2)
        return sol[: self.n], sol[self.n:]


@dataclass
class _IpmOutcome:
    converged: bool
    x: np.ndarray
    y: np.ndarray
    objective: float
    iterations: int
    reason: str
    near_optimal: bool = False  # stopped with both residuals small, only the gap open


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _mehrotra(
    A: sp.csr_matrix,
    b: np.ndarray,
    c: np.ndarray,
    u: np.ndarray,
    free: np.ndarray,
    ftol: float,
    otol: float,
    max_iter: int,
    deadline: float,
    obj_unit: float = 1.0,
    step: float = _STEP,
    obj_offset: float = 0.0,
) -> _IpmOutcome:
    m, n = A.shape
    if n == 0:
        ok = bool(np.all(np.abs(b) <= ftol))
        return _IpmOutcome(ok, np.zeros(0), np.zeros(m), 0.0, 0, "empty" if ok else "diverged")
    AT = A.T.tocsr()
    U = np.isfinite(u)
    uU = u[U]
    B = ~free  # columns with a sign restriction
    bnorm = 1.0 + (np.linalg.norm(b, np.inf) if m else 0.0)
    cnorm = 1.0 + np.linalg.norm(c, np.inf)
    unorm = 1.0 + (np.linalg.norm(uU, np.inf) if uU.size else 0.0)

    # Mehrotra-style start from the least-norm solution
    if m:
        F = _Factor(A, AT, np.ones(n))
        # least-norm x with A x = b, and least-squares y for Aᵀ y ≈ c
        x, _ = F.solve(np.zeros(n), b)
        _, y = F.solve(-c, np.zeros(m))
        y = -y
        z = c - AT @ y
    else:
        x = np.zeros(n)
        y = np.zeros(0)
        z = c.copy()
    z[free] = 0.0
    if B.any():
        xb, zb = x[B], z[B]
        xb = xb + max(-1.5 * xb.min(), 0.0)
        zb = zb + max(-1.5 * zb.min(), 0.0)
        xz = float(xb @ zb)
        xb = xb + 0.5 * xz / max(zb.sum(), 1e-300) + 1e-2
        zb = zb + 0.5 * xz / max(xb.sum(), 1e-300) + 1e-2
        x[B], z[B] = xb, zb
    if U.any():
        xU = np.minimum(x[U], 0.5 * uU)
        x[U] = np.maximum(xU, 1e-3 * uU)
        w = uU - x[U]
        v = np.maximum(z[U], 1e-2)
        z[U] = z[U] + v
    else:
        w = np.zeros(0)
        v = np.zeros(0)
    nc = max(int(B.sum()) + int(U.sum()), 1)
    # free columns get a fixed primal regularisation in place of z/x
    rho = 1e-8

    stall = 0
    it = 0
    reason = "iteration_limit"
    xb_ = np.ones(n)
    history: list[float] = []
    best = None
    prev = None
    pivot = 0.0
    retried = False
    restored = False
    debug = logger.isEnabledFor(logging.DEBUG)
    for it in range(1, max_iter + 1):
        rb = b - A @ x if m else np.zeros(0)
        rc = c - (AT @ y if m else 0.0) - z
        rc[U] += v
        ru = uU - x[U] - w
        mu = (float(x[B] @ z[B]) + float(w @ v)) / nc
        pobj = float(c @ x)
        dobj = (float(b @ y) if m else 0.0) - float(uU @ v)
        pinf = max(
            (np.linalg.norm(rb, np.inf) if m else 0.0) / bnorm,
            (np.linalg.norm(ru, np.inf) if ru.size else 0.0) / unorm,
        )
        dinf = np.linalg.norm(rc, np.inf) / cnorm
        gap = abs(pobj - dobj) / (obj_unit + abs(pobj + obj_offset))
        if pinf <= ftol and dinf <= otol and gap <= otol:
            return _IpmOutcome(True, x, y, pobj, it, "optimal")
        # fallback kept in case the gap stalls at the round-off floor: feasible
        # iterates with a gap within 100x of the target
        if pinf <= ftol and dinf <= otol and gap <= _RELAXED * otol and (best is None or gap < best[0]):
            best = (gap, x.copy(), y.copy(), pobj)
        merit = max(pinf, dinf, gap)
        if prev is not None and merit > 1e3 * prev[0] and not retried:
            # a blown-up step: redo it from the previous iterate with threshold pivoting
            if debug:
                logger.debug("it %3d merit jumped to %.2e; retrying with pivoting", it, merit)
            pivot = 0.1
            retried = True
            restored = True
            _, x, y, z, w, v = prev
            continue
        # the restored iterate itself does not count as a fresh step
        if not restored:
            retried = False
        restored = False
        prev = (merit, x, y, z, w, v)
        history.append(merit)
        if debug:
            logger.debug("it %3d pinf %.2e dinf %.2e gap %.2e mu %.2e", it, pinf, dinf, gap, mu)
        if len(history) > _WINDOW and min(history[-_WINDOW:]) > 0.5 * min(history[:-_WINDOW]):
            reason = "stalled"
            break
        if (
            np.linalg.norm(x, np.inf) > _DIVERGE
            or (m and np.linalg.norm(y, np.inf) > _DIVERGE)
            or np.linalg.norm(z, np.inf) > _DIVERGE
        ):
            reason = "diverged"
            break
        if time.perf_counter() > deadline:
            reason = "time_limit"
            break

        # x is only used as a divisor on restricted columns
        xb_[B] = x[B]
        inv = np.where(B, z / xb_, rho)
        inv[U] += v / w
        # pinned columns need z/x well past 1e14, or their step overshoots x itself
        inv = np.clip(inv, 1e-20, 1e20)
        theta = 1.0 / inv
        try:
            F = _Factor(A, AT, inv, pivot) if m else None
            pivot = 0.0  # pivoting is slow; use it for the retried step only
        except np.linalg.LinAlgError:
            reason = "singular"
            break

        def direction(rxz, rwv):
            rhat = rc - rxz / xb_
            rhat[U] += (rwv - v * ru) / w
            if m:
                dx, dy = F.solve(rhat, rb)
            else:
                dy = np.zeros(0)
                dx = -theta * rhat
            dw = ru - dx[U]
            dv = (rwv - v * dw) / w
            # (rxz - z dx) / x cancels badly once x sits at its bound, so
            # those columns take dz from the dual rows instead
            dz = (rxz - z * dx) / xb_
            near = B & (x < z)
            aty = AT @ dy if m else np.zeros(n)
            if near.any():
                dzr = rc - aty
                dzr[U] += dv
                dz[near] = dzr[near]
            dz[free] = 0.0
            # same cancellation on the upper-bound side when w sits at 0
            wnear = (w < v) & ~near[U]
            if wnear.any():
                dvr = (dz + aty - rc)[U]
                dv[wnear] = dvr[wnear]
            return dx, dy, dz, dw, dv

        zero_free = np.where(B, 1.0, 0.0)
        dxa, dya, dza, dwa, dva = direction(-x * z * zero_free, -w * v)
        ap_aff = ap = min(_max_step(x[B], dxa[B]), _max_step(w, dwa))
        ad_aff = ad = min(_max_step(z[B], dza[B]), _max_step(v, dva))
        mu_aff = (
            float((x[B] + ap * dxa[B]) @ (z[B] + ad * dza[B]))
            + float((w + ap * dwa) @ (v + ad * dva))
        ) / nc
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        rxz = (sigma * mu - x * z - dxa * dza) * zero_free
        dx, dy, dz, dw, dv = direction(rxz, sigma * mu - w * v - dwa * dva)
        ap = min(1.0, step * min(_max_step(x[B], dx[B]), _max_step(w, dw)))
        ad = min(1.0, step * min(_max_step(z[B], dz[B]), _max_step(v, dv)))
        if min(ap, ad) < 0.1 * min(ap_aff, ad_aff):
            # the second-order term can swamp the step near the optimum; fall
            # back to the plain centred direction
            dx, dy, dz, dw, dv = direction((sigma * mu - x * z) * zero_free, sigma * mu - w * v)
            ap = min(1.0, step * min(_max_step(x[B], dx[B]), _max_step(w, dw)))
            ad = min(1.0, step * min(_max_step(z[B], dz[B]), _max_step(v, dv)))
        x = x + ap * dx
        w = w + ap * dw
        y = y + ad * dy
        z = z + ad * dz
        v = v + ad * dv
        x[B] = np.maximum(x[B], 1e-300)
        z[B] = np.maximum(z[B], 1e-300)
        z[free] = 0.0
        if w.size:
            w = np.maximum(w, 1e-300)
            v = np.maximum(v, 1e-300)
        if ap < 1e-10 and ad < 1e-10:
            stall += 1
            if stall >= 3:
                reason = "stalled"
                break
        else:
            stall = 0
    if best is not None:
        return _IpmOutcome(True, best[1], best[2], best[3], it, "optimal_relaxed_gap")
    near = bool(history) and min(history) < 1e-4
    return _IpmOutcome(False, x, y, float(c @ x), it, reason, near)


def _solve_scaled(A, b, c, u, free, ftol, otol, max_iter, deadline, step=_STEP,
                  offset=0.0) -> tuple[_IpmOutcome, np.ndarray]:
    """Equilibrate, normalise magnitudes, run the IPM, and undo the scaling on x."""
    r, s = _ruiz(A)
    As = (sp.diags(r) @ A @ sp.diags(s)).tocsr()
    bs = r * b
    cs = s * c
    us = u / s
    bscale = max(1.0, float(np.abs(bs).max(initial=0.0)))
    # a few penalty prices would otherwise shrink the real costs toward round-off
    nzc = np.abs(cs[cs != 0])
    cscale = max(1.0, float(np.sqrt(nzc.max() * np.median(nzc)))) if nzc.size else 1.0
    # gap is measured relative to 1 + |objective| in original units, constant included
    unit = 1.0 / (bscale * cscale)
    out = _mehrotra(As, bs / bscale, cs / cscale, us / bscale, free, ftol, otol, max_iter, deadline,
                    obj_unit=unit, step=step, obj_offset=offset * unit)
    x = s * out.x * bscale
    return out, x


def _classify(std: _Standard, deadline: float) -> Status:
    A, b, c, u, free = std.A, std.b, std.c, std.u, std.free
    m, n = A.shape
    # phase I: minimise total artificial violation
    I = sp.identity(m, format="csr")
    A1 = sp.hstack([A, I, -I], format="csr")
    c1 = np.concatenate([np.zeros(n), np.ones(2 * m)])
    u1 = np.concatenate([u, np.full(2 * m, np.inf)])
    f1 = np.concatenate([free, np.zeros(2 * m, dtype=bool)])
    out, x1 = _solve_scaled(A1, b, c1, u1, f1, 1e-9, 1e-9, 300, deadline)
    viol = float(c1 @ x1)
    if out.converged and viol > 1e-6 * (1.0 + np.abs(b).max(initial=0.0)):
        return Status.INFEASIBLE
    if not out.converged:
        return Status.ITERATION_LIMIT
    # primal is feasible; it is unbounded iff the dual is infeasible. Dual
    # phase I: minimise t (>= 0) over y with a_jᵀy - t_j <= c_j on sign-
    # restricted columns without an upper bound and a_jᵀy = c_j on free ones.
    ray = ~np.isfinite(u)
    pos = np.flatnonzero(ray & ~free)
    fr = np.flatnonzero(ray & free)
    if pos.size + fr.size == 0:
        return Status.ITERATION_LIMIT
    At = A.T.tocsr()
    k, f = pos.size, fr.size
    A2 = sp.bmat(
        [
            [At[pos], -sp.identity(k), sp.identity(k), None, None],
            [At[fr], None, None, sp.identity(f), -sp.identity(f)],
        ],
        format="csr",
    ) if f and k else (
        sp.hstack([At[pos], -sp.identity(k), sp.identity(k)], format="csr") if k
        else sp.hstack([At[fr], sp.identity(f), -sp.identity(f)], format="csr")
    )
    b2 = np.concatenate([c[pos], c[fr]])
    nvar = A2.shape[1]
    c2 = np.zeros(nvar)
    c2[m: m + k] = 1.0
    c2[m + 2 * k:] = 1.0
    f2 = np.zeros(nvar, dtype=bool)
    f2[:m] = True
    out2, sol = _solve_scaled(A2, b2, c2, np.full(nvar, np.inf), f2, 1e-9, 1e-9, 300, deadline)
    if out2.converged and float(c2 @ sol) > 1e-6 * (1.0 + np.abs(c).max(initial=0.0)):
        return Status.UNBOUNDED
    return Status.ITERATION_LIMIT


def _polish(std: _Standard, xs: np.ndarray, rounds: int = 2) -> np.ndarray:
    """Remove the leftover row residual by a weighted least-change correction.

    Each column is weighted by its distance to the nearest bound, so entries
    sitting on a bound barely move and the correction stays inside the box.
    """
    A, b, u, free = std.A, std.b, std.u, std.free
    m, n = A.shape
    if m == 0 or n == 0:
        return xs
    AT = A.T.tocsr()
    x = xs.copy()
    for _ in range(rounds):
        rb = b - A @ x
        if not np.any(rb):
            break
        room = np.where(np.isfinite(u), np.minimum(x, u - x), x)
        room = np.where(free, np.maximum(np.abs(x), 1.0), room)
        theta = np.clip(room, 1e-12, 1e12)
        try:
            F = _Factor(A, AT, 1.0 / theta)
            dx, _ = F.solve(np.zeros(n), rb)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dx)):
            break
        x = x + dx
        lo = np.where(free, -np.inf, 0.0)
        x = np.clip(x, lo, u)
    return x


def solve_ipm(lp: LinearProgram, tol: Tolerances, limits: Limits) -> SolveResult:
    t0 = time.perf_counter()
    deadline = t0 + limits.seconds if math.isfinite(limits.seconds) else math.inf
    std = _standard_form(lp, tol.feasibility)

    def fail(status: Status, its: int = 0, reason: str = "") -> SolveResult:
        return SolveResult(
            status, math.nan, np.full(lp.num_variables, np.nan), lp.names, math.inf,
            time.perf_counter() - t0, "ipm", its, {"reason": reason or status.value},
        )

    if std.trivially is not None:
        return fail(std.trivially, reason="presolve")

    # internal tolerance is tightened until the original rows meet the target
    ftol = min(tol.feasibility, 1e-8)
    otol = min(tol.optimality, 1e-8)
    total_its = 0
    steps = list(_RETRY_STEPS)
    step = steps.pop(0)
    rounds = 0
    while rounds < 3:
        out, xs = _solve_scaled(std.A, std.b, std.c, std.u, std.free, ftol, otol, limits.iterations, deadline,
                                step, std.offset)
        total_its += out.iterations
        if not out.converged:
            if out.near_optimal and out.reason == "stalled" and steps:
                # stuck just short of the optimum; a shorter step usually keeps
                # the iterates better centred
                step = steps.pop(0)
                logger.debug("stalled near the optimum; retrying with step factor %g", step)
                continue
            break
        rounds += 1
        xs = _polish(std, xs)
        x = std.base + std.P @ xs[: std.n_struct]
        x = np.clip(x, lp.lower, lp.upper)
        resid = scaled_residual(lp, x)
        if resid <= tol.feasibility:
            return SolveResult(
                Status.OPTIMAL, lp.objective_value(x), x, lp.names, resid,
                time.perf_counter() - t0, "ipm", total_its, {"reason": "optimal"},
            )
        ftol *= 0.01
        otol *= 0.1
        logger.debug("original residual %.2e above target; tightening", resid)
    if out.reason == "time_limit" or out.reason == "iteration_limit" and out.iterations >= limits.iterations:
        return fail(Status.ITERATION_LIMIT, total_its, out.reason)
    logger.debug("ipm did not converge (%s); classifying", out.reason)
    return fail(_classify(std, deadline), total_its, out.reason)
