"""Dense revised simplex for small and medium linear programs.

Solves ``min c @ x`` subject to ``A_eq @ x == b_eq``, ``A_ub @ x <= b_ub``
and per-variable bounds. Upper bounds are handled inside the ratio test
(bounded-variable simplex) rather than as extra rows. Pivoting follows
Bland's rule throughout, so the same problem always takes the same path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

PIVOT_TOL = 1e-10
COST_TOL = 1e-9
REFACTOR_EVERY = 64

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpIterationLimit(RuntimeError):
    pass


def _matrix(a, n: int) -> NDArray[np.float64]:
    if a is None:
        return np.zeros((0, n))
    arr = np.asarray(a, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, n)
    return np.atleast_2d(arr)


@dataclass
class LpProblem:
    """``bounds`` is a list of (lo, hi) pairs; None or +-inf means unbounded."""

    c: NDArray[np.float64]
    A_eq: NDArray[np.float64] | None = None
    b_eq: NDArray[np.float64] | None = None
    A_ub: NDArray[np.float64] | None = None
    b_ub: NDArray[np.float64] | None = None
    bounds: Sequence[tuple[float | None, float | None]] | None = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        n = self.c.shape[0]
        self.A_eq = _matrix(self.A_eq, n)
        self.A_ub = _matrix(self.A_ub, n)
        self.b_eq = np.asarray(
            self.b_eq if self.b_eq is not None else [], dtype=np.float64
        ).reshape(-1)
        self.b_ub = np.asarray(
            self.b_ub if self.b_ub is not None else [], dtype=np.float64
        ).reshape(-1)
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * n
        lo = np.array(
            [-math.inf if b[0] is None else b[0] for b in self.bounds], dtype=float
        )
        hi = np.array(
            [math.inf if b[1] is None else b[1] for b in self.bounds], dtype=float
        )
        self.lo, self.hi = lo, hi
        if self.A_eq.shape[1] != n or self.A_ub.shape[1] != n or lo.shape[0] != n:
            raise ValueError("column counts of c, A_eq, A_ub and bounds disagree")
        if self.A_eq.shape[0] != self.b_eq.shape[0]:
            raise ValueError("A_eq and b_eq row counts disagree")
        if self.A_ub.shape[0] != self.b_ub.shape[0]:
            raise ValueError("A_ub and b_ub row counts disagree")

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    x: NDArray[np.float64]
    objective_value: float
    status: str
    iterations: int
    tableau: list[list[float]] | None = field(default=None, repr=False)


class _Standard:
    """Problem rewritten as ``A y = b``, ``0 <= y <= u``.

    Each original variable maps to one or two standard columns:
    finite lower bound -> x = lo + y; only finite upper -> x = hi - y;
    free -> x = y+ - y-.
    """

    def __init__(self, prob: LpProblem):
        n = prob.n
        cols: list[tuple[int, float]] = []  # (original index, sign)
        offset = np.zeros(n)
        upper: list[float] = []
        for j in range(n):
            lo, hi = prob.lo[j], prob.hi[j]
            if math.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                upper.append(hi - lo)
            elif math.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
                upper.append(math.inf)
            else:
                cols.append((j, 1.0))
                upper.append(math.inf)
                cols.append((j, -1.0))
                upper.append(math.inf)
        self.trivially_infeasible = bool(np.any(prob.lo > prob.hi))
        self.cols = cols
        self.offset = offset
        idx = np.array([c[0] for c in cols], dtype=int)
        sign = np.array([c[1] for c in cols])
        self.idx, self.sign = idx, sign

        A_eq = prob.A_eq[:, idx] * sign
        A_ub = prob.A_ub[:, idx] * sign
        b_eq = prob.b_eq - prob.A_eq @ offset
        b_ub = prob.b_ub - prob.A_ub @ offset
        me, mu = A_eq.shape[0], A_ub.shape[0]
        ns = len(cols)
        # structural | slacks
        A = np.zeros((me + mu, ns + mu))
        A[:me, :ns] = A_eq
        A[me:, :ns] = A_ub
        A[me:, ns:] = np.eye(mu)
        b = np.concatenate([b_eq, b_ub])
        cost = np.zeros(ns + mu)
        cost[:ns] = prob.c[idx] * sign
        u = np.concatenate([np.array(upper, dtype=float), np.full(mu, math.inf)])
        self.n_struct = ns
        self.n_slack = mu
        self.n_rows = me + mu
        self.slack_row_start = me
        # normalise row signs so b >= 0
        neg = b < 0
        A[neg] *= -1.0
        b[neg] *= -1.0
        self.row_flipped = neg
        self.A, self.b, self.cost, self.u = A, b, cost, u
        self.const = float(prob.c @ offset)

    def recover(self, y: NDArray[np.float64]) -> NDArray[np.float64]:
        x = self.offset.copy()
        np.add.at(x, self.idx, self.sign * y[: self.n_struct])
        return x


class _Simplex:
    def __init__(self, A, b, u, basis, at_upper, max_iter):
        self.A = A
        self.b = b
        self.u = u
        self.m, self.n = A.shape
        self.basis = np.array(basis, dtype=int)
        self.at_upper = at_upper
        self.is_basic = np.zeros(self.n, dtype=bool)
        self.is_basic[self.basis] = True
        self.iterations = 0
        self.max_iter = max_iter
        self._since_refactor = 0
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B) if self.m else np.zeros((0, 0))
        self._since_refactor = 0
        self._recompute_xb()

    def _recompute_xb(self) -> None:
        rhs = self.b.copy()
        up = np.flatnonzero(self.at_upper & ~self.is_basic)
        if up.size:
            rhs -= self.A[:, up] @ self.u[up]
        self.xB = self.Binv @ rhs

    def values(self) -> NDArray[np.float64]:
        y = np.zeros(self.n)
        up = self.at_upper & ~self.is_basic
        y[up] = self.u[up]
        y[self.basis] = self.xB
        return y

    def run(self, cost: NDArray[np.float64]) -> str:
        """Pivot to optimality for ``cost``; return a status string."""
        A, u = self.A, self.u
        movable = u > 0.0
        while True:
            if self.iterations >= self.max_iter:
                raise LpIterationLimit(f"no convergence after {self.iterations} pivots")
            duals = cost[self.basis] @ self.Binv
            reduced = cost - duals @ A
            improving = (
                ~self.is_basic
                & movable
                & (
                    ((~self.at_upper) & (reduced < -COST_TOL))
                    | (self.at_upper & (reduced > COST_TOL))
                )
            )
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return OPTIMAL
            q = int(cand[0])
            direction = -1.0 if self.at_upper[q] else 1.0
            alpha = self.Binv @ A[:, q]
            step = direction * alpha

            # ratio test; basic values move as xB - theta * step
            theta = u[q]
            leave = -1
            leave_to_upper = False
            dec = step > PIVOT_TOL
            inc = step < -PIVOT_TOL
            ratios = np.full(self.m, math.inf)
            ratios[dec] = np.maximum(self.xB[dec], 0.0) / step[dec]
            ub = u[self.basis]
            inc_fin = inc & np.isfinite(ub)
            ratios[inc_fin] = np.maximum(ub[inc_fin] - self.xB[inc_fin], 0.0) / (
                -step[inc_fin]
            )
            if self.m:
                best = float(ratios.min())
                if best < theta:
                    tied = np.flatnonzero(ratios <= best + PIVOT_TOL * (1.0 + best))
                    # Bland: lowest variable index among tied leaving candidates
                    r = int(tied[np.argmin(self.basis[tied])])
                    theta = float(ratios[r])
                    leave = r
                    leave_to_upper = bool(inc[r])
            if math.isinf(theta):
                return UNBOUNDED

            self.iterations += 1
            if leave < 0:
                # bound flip of the entering variable, basis unchanged
                self.xB -= theta * step
                self.at_upper[q] = not self.at_upper[q]
                continue

            self.xB -= theta * step
            entering_value = (u[q] if self.at_upper[q] else 0.0) + direction * theta
            out_var = int(self.basis[leave])
            self.is_basic[out_var] = False
            self.at_upper[out_var] = leave_to_upper
            self.basis[leave] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.xB[leave] = entering_value

            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self._since_refactor += 1
            if self._since_refactor >= REFACTOR_EVERY:
                self.refactor()


def solve_lp(
    problem: LpProblem,
    feasibility_tol: float = 1e-8,
    max_iter: int = 1_000_000,
    keep_tableau: bool = False,
) -> LpSolution:
    """Two-phase bounded revised simplex with Bland's anti-cycling rule."""
    std = _Standard(problem)
    n0 = problem.n
    if std.trivially_infeasible:
        return LpSolution(np.full(n0, np.nan), math.nan, INFEASIBLE, 0)

    A, b, u = std.A, std.b, std.u
    m, n = A.shape
    # slack columns with +1 coefficient start basic; other rows get artificials
    basis = [-1] * m
    for k in range(std.n_slack):
        row = std.slack_row_start + k
        if not std.row_flipped[row]:
            basis[row] = std.n_struct + k
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    A_full = np.zeros((m, n + n_art))
    A_full[:, :n] = A
    for a, i in enumerate(art_rows):
        A_full[i, n + a] = 1.0
        basis[i] = n + a
    u_full = np.concatenate([u, np.full(n_art, math.inf)])
    at_upper = np.zeros(n + n_art, dtype=bool)

    splx = _Simplex(A_full, b, u_full, basis, at_upper, max_iter)
    if n_art:
        phase1 = np.zeros(n + n_art)
        phase1[n:] = 1.0
        splx.run(phase1)
        infeas = float(splx.values()[n:].sum())
        if infeas > feasibility_tol * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution(
                np.full(n0, np.nan), math.nan, INFEASIBLE, splx.iterations
            )
        # artificials are pinned at zero for phase 2
        splx.u[n:] = 0.0
        splx.at_upper[n:] = False

    cost = np.concatenate([std.cost, np.zeros(n_art)])
    status = splx.run(cost)
    if status == UNBOUNDED:
        return LpSolution(np.full(n0, np.nan), -math.inf, UNBOUNDED, splx.iterations)

    splx.refactor()
    y = splx.values()[:n]
    x = std.recover(y)
    # snap tiny bound excursions caused by round-off
    lo_ok = np.isfinite(problem.lo)
    hi_ok = np.isfinite(problem.hi)
    near_lo = lo_ok & (np.abs(x - problem.lo) <= feasibility_tol)
    near_hi = hi_ok & (np.abs(x - problem.hi) <= feasibility_tol)
    x[near_lo] = problem.lo[near_lo]
    x[near_hi] = problem.hi[near_hi]
    tableau = None
    if keep_tableau:
        body = splx.Binv @ splx.A
        tableau = [
            [float(splx.basis[i]), float(splx.xB[i])] + body[i].tolist()
            for i in range(m)
        ]
    return LpSolution(
        x=x,
        objective_value=float(problem.c @ x),
        status=OPTIMAL,
        iterations=splx.iterations,
        tableau=tableau,
    )


def check_feasible(problem: LpProblem, x: NDArray[np.float64], tol: float) -> bool:
    if problem.A_eq.shape[0] and np.max(np.abs(problem.A_eq @ x - problem.b_eq)) > tol:
        return False
    if problem.A_ub.shape[0] and np.max(problem.A_ub @ x - problem.b_ub) > tol:
        return False
    return bool(np.all(x >= problem.lo - tol) and np.all(x <= problem.hi + tol))


def dump_tableau(solution: LpSolution, path: str) -> None:
    """Write the final tableau (basic var, value, B^-1 A row) as CSV."""
    if solution.tableau is None:
        raise ValueError("solution was computed without keep_tableau=True")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        width = len(solution.tableau[0]) - 2 if solution.tableau else 0
        w.writerow(["basic", "value"] + [f"a{k}" for k in range(width)])
        for row in solution.tableau:
            w.writerow([int(row[0])] + [format(v, ".17g") for v in row[1:]])
