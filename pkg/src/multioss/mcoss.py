"""Baseline multi-criteria OSS: assignment LP with a group-norm penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .instance import INF, QMatrices, SelectionConfig, SelectionInstance, build_q, require_valid
from .lp import OPTIMAL, LpProblem, LpSolution, solve_lp

SELECT_TOL = 1e-6


class SolverError(RuntimeError):
    """The LP came back infeasible or unbounded where it should not."""


@dataclass(frozen=True)
class Assignment:
    z_old: NDArray[np.float64]
    z_new: NDArray[np.float64]

    def __post_init__(self) -> None:
        z_new = np.asarray(self.z_new, dtype=np.float64)
        z_old = np.asarray(self.z_old, dtype=np.float64)
        if z_old.size == 0:
            z_old = z_old.reshape(z_new.shape[0], 0)
        object.__setattr__(self, "z_new", z_new)
        object.__setattr__(self, "z_old", z_old)

    @property
    def m(self) -> int:
        return self.z_new.shape[0]

    def row_sums(self) -> NDArray[np.float64]:
        return self.z_old.sum(axis=1) + self.z_new.sum(axis=1)

    def mass_old(self) -> NDArray[np.float64]:
        return self.z_old.sum(axis=0)

    def mass_new(self) -> NDArray[np.float64]:
        return self.z_new.sum(axis=0)

    def is_integral(self, tol: float = 1e-6) -> bool:
        z = np.concatenate([self.z_old.ravel(), self.z_new.ravel()])
        return bool(np.all(np.minimum(np.abs(z), np.abs(z - 1.0)) <= tol))

    @classmethod
    def from_choices(cls, choices, m: int, r: int) -> "Assignment":
        """Integral assignment; ``choices[i] < r`` is old column, else new ``- r``."""
        z_old = np.zeros((m, r))
        z_new = np.zeros((m, m))
        for i, c in enumerate(choices):
            if c < r:
                z_old[i, c] = 1.0
            else:
                z_new[i, c - r] = 1.0
        return cls(z_old=z_old, z_new=z_new)


@dataclass
class RepresentativeReport:
    selected_new: list[int]
    column_mass: NDArray[np.float64]
    objective_value: float
    status: str
    iterations: int
    extra: dict[str, Any] = field(default_factory=dict)


def column_norms(z_new: NDArray[np.float64], p: float) -> NDArray[np.float64]:
    if z_new.shape[0] == 0:
        return np.zeros(z_new.shape[1])
    if p == INF:
        return np.abs(z_new).max(axis=0)
    return np.abs(z_new).sum(axis=0)


def select_columns(column_mass: NDArray[np.float64], threshold: float) -> list[int]:
    """Columns whose representativeness reaches the threshold.

    Mass equal to the threshold (up to round-off) counts as selected.
    """
    return [int(j) for j in np.flatnonzero(column_mass >= threshold - SELECT_TOL)]


def _check_dims(assignment: Assignment, instance: SelectionInstance) -> None:
    m, r = instance.m, instance.r
    if assignment.z_new.shape != (m, m) or assignment.z_old.shape != (m, r):
        raise ValueError(
            f"assignment shapes {assignment.z_old.shape}/{assignment.z_new.shape} "
            f"do not match instance m={m}, r={r}"
        )


def eval_mcoss_objective(
    assignment: Assignment, instance: SelectionInstance, config: SelectionConfig
) -> float:
    _check_dims(assignment, instance)
    q = build_q(instance, config.rho)
    value = float(np.sum(assignment.z_old * q.q_old) + np.sum(assignment.z_new * q.q_new))
    return value + config.lam * float(column_norms(assignment.z_new, config.p).sum())


class AssignmentLp:
    """Variable layout shared by both convex formulations.

    Order: z_old (row-major m x r), z_new (row-major m x m), then any
    auxiliary blocks registered with :meth:`add_block`.
    """

    def __init__(self, m: int, r: int):
        self.m, self.r = m, r
        self.n = m * r + m * m
        self.blocks: dict[str, tuple[int, int]] = {}
        self.bounds: list[tuple[float, float]] = [(0.0, 1.0)] * self.n

    def z_old_index(self, i: int, j: int) -> int:
        return i * self.r + j

    def z_new_index(self, i: int, j: int) -> int:
        return self.m * self.r + i * self.m + j

    def add_block(self, name: str, size: int, lo: float, hi: float) -> int:
        start = self.n
        self.blocks[name] = (start, size)
        self.n += size
        self.bounds = self.bounds + [(lo, hi)] * size
        return start

    def row_stochastic(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        m, r = self.m, self.r
        A = np.zeros((m, self.n))
        for i in range(m):
            A[i, i * r : (i + 1) * r] = 1.0
            A[i, m * r + i * m : m * r + (i + 1) * m] = 1.0
        return A, np.ones(m)

    def norm_rows(self, p: float, t_start: int | None):
        """Rows linearising column norms of z_new.

        Returns (A_ub, b_ub, norm_coeffs) where ``norm_coeffs @ x`` equals
        the sum of column p-norms at any optimum-compatible point.
        """
        m = self.m
        coeffs = np.zeros(self.n)
        if p == INF:
            assert t_start is not None
            A = np.zeros((m * m, self.n))
            for i in range(m):
                for j in range(m):
                    row = i * m + j
                    A[row, self.z_new_index(i, j)] = 1.0
                    A[row, t_start + j] = -1.0
            coeffs[t_start : t_start + m] = 1.0
            return A, np.zeros(m * m), coeffs
        coeffs[m * self.r : m * self.r + m * m] = 1.0
        return np.zeros((0, self.n)), np.zeros(0), coeffs

    def unpack(self, x: NDArray[np.float64]) -> Assignment:
        m, r = self.m, self.r
        z_old = np.clip(x[: m * r].reshape(m, r), 0.0, 1.0)
        z_new = np.clip(x[m * r : m * r + m * m].reshape(m, m), 0.0, 1.0)
        return Assignment(z_old=z_old, z_new=z_new)

    def block(self, x: NDArray[np.float64], name: str) -> NDArray[np.float64]:
        start, size = self.blocks[name]
        return x[start : start + size]


def pad(A: NDArray[np.float64], n: int) -> NDArray[np.float64]:
    if A.shape[1] == n:
        return A
    out = np.zeros((A.shape[0], n))
    out[:, : A.shape[1]] = A
    return out


def build_mcoss_lp(instance: SelectionInstance, config: SelectionConfig) -> tuple[LpProblem, AssignmentLp]:
    m, r = instance.m, instance.r
    q = build_q(instance, config.rho)
    lay = AssignmentLp(m, r)
    t_start = lay.add_block("t", m, 0.0, 1.0) if config.p == INF else None
    A_norm, b_norm, norm_coeffs = lay.norm_rows(config.p, t_start)
    c = np.zeros(lay.n)
    c[: m * r] = q.q_old.ravel()
    c[m * r : m * r + m * m] = q.q_new.ravel()
    c += config.lam * norm_coeffs
    A_eq, b_eq = lay.row_stochastic()
    prob = LpProblem(
        c=c, A_eq=A_eq, b_eq=b_eq, A_ub=pad(A_norm, lay.n), b_ub=b_norm, bounds=lay.bounds
    )
    return prob, lay


def _raise_status(sol: LpSolution, what: str) -> None:
    if sol.status != OPTIMAL:
        raise SolverError(f"{what}: LP status {sol.status}")


def solve_mcoss(
    instance: SelectionInstance, config: SelectionConfig
) -> tuple[Assignment, RepresentativeReport]:
    """Solve the baseline relaxation and round by column mass."""
    require_valid(instance)
    prob, lay = build_mcoss_lp(instance, config)
    sol = solve_lp(prob, config.feasibility_tol)
    # a valid instance always admits the all-self assignment
    _raise_status(sol, "mcoss")
    assignment = lay.unpack(sol.x)
    mass = assignment.mass_new()
    report = RepresentativeReport(
        selected_new=select_columns(mass, config.rounding_threshold),
        column_mass=mass,
        objective_value=eval_mcoss_objective(assignment, instance, config),
        status=sol.status,
        iterations=sol.iterations,
        extra={"lp_objective": sol.objective_value},
    )
    return assignment, report


def solution_json(
    assignment: Assignment, report: RepresentativeReport, method: str, config: SelectionConfig
) -> dict[str, Any]:
    return {
        "z_old": assignment.z_old.tolist(),
        "z_new": assignment.z_new.tolist(),
        "selected_new": list(report.selected_new),
        "objective": report.objective_value,
        "method": method,
        "config": config.to_dict(),
    }
