"""Thresholded multi-criteria OSS.

Each column earns at most one copy of its own pointwise score through the
saturating credit ``min(eps, mass) / eps``, and the new block is limited by
an explicit budget on the sum of column norms. The concave credit is
linearised with one auxiliary variable per column, which is exact as long
as every loss is nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .instance import INF, InstanceError, SelectionConfig, SelectionInstance, require_valid
from .lp import INFEASIBLE, OPTIMAL, LpProblem, solve_lp
from .mcoss import (
    Assignment,
    AssignmentLp,
    RepresentativeReport,
    SolverError,
    _check_dims,
    column_norms,
    pad,
    select_columns,
    solution_json,
)

TIE_TOL = 1e-9


class BudgetError(InstanceError):
    """The cardinality budget is below what an empty old set forces."""

    def __init__(self, frac: float, min_frac: float, p: float):
        self.frac = frac
        self.min_frac = min_frac
        super().__init__(
            f"frac={frac} is infeasible with no existing representatives "
            f"(p={'inf' if p == INF else 1}); minimum feasible frac is {min_frac:.17g}"
        )


@dataclass(frozen=True)
class ThreshSolution:
    assignment: Assignment
    s_old: NDArray[np.float64]
    s_new: NDArray[np.float64]
    objective_value: float
    budget_usage: float


def compute_s(column_mass, epsilon: float):
    """Saturating credit: 0 at no mass, 1 once the mass reaches epsilon."""
    return np.minimum(epsilon, column_mass) / epsilon


def min_feasible_frac(m: int, r: int, p: float) -> float:
    if r > 0:
        return 0.0
    return 1.0 / m if p == INF else 1.0


def cap_selection(selected, mass, loss, cap: int) -> list[int]:
    """Keep at most ``cap`` columns: largest mass first, then larger loss.

    A fractional optimum can spread the budget thinly enough that more
    columns reach the threshold than the budget allows.
    """
    if len(selected) <= cap:
        return list(selected)
    ranked = sorted(selected, key=lambda j: (-round(float(mass[j]), 9), -float(loss[j]), j))
    return sorted(ranked[:cap])


def eval_thresh_objective(
    solution: ThreshSolution | Assignment,
    instance: SelectionInstance,
    config: SelectionConfig,
) -> float:
    """Objective value with credits recomputed from the column masses."""
    assignment = solution.assignment if isinstance(solution, ThreshSolution) else solution
    _check_dims(assignment, instance)
    rho = config.rho
    dist = float(
        np.sum(assignment.z_old * instance.d_old) + np.sum(assignment.z_new * instance.d_new)
    )
    s_old = compute_s(assignment.mass_old(), config.epsilon)
    s_new = compute_s(assignment.mass_new(), config.epsilon)
    credit = float(s_old @ instance.loss_old + s_new @ instance.loss_new)
    return rho * dist - (1.0 - rho) * credit


def build_thresh_lp(instance: SelectionInstance, config: SelectionConfig):
    m, r = instance.m, instance.r
    rho, eps = config.rho, config.epsilon
    lay = AssignmentLp(m, r)
    s_old = lay.add_block("s_old", r, 0.0, 1.0)
    s_new = lay.add_block("s_new", m, 0.0, 1.0)
    t_start = lay.add_block("t", m, 0.0, 1.0) if config.p == INF else None
    n = lay.n

    c = np.zeros(n)
    c[: m * r] = rho * instance.d_old.ravel()
    c[m * r : m * r + m * m] = rho * instance.d_new.ravel()
    c[s_old : s_old + r] = -(1.0 - rho) * instance.loss_old
    c[s_new : s_new + m] = -(1.0 - rho) * instance.loss_new

    # s_j <= mass_j / eps   <=>   eps * s_j - mass_j <= 0
    A_s = np.zeros((r + m, n))
    for j in range(r):
        A_s[j, s_old + j] = eps
        for i in range(m):
            A_s[j, lay.z_old_index(i, j)] = -1.0
    for j in range(m):
        A_s[r + j, s_new + j] = eps
        for i in range(m):
            A_s[r + j, lay.z_new_index(i, j)] = -1.0

    A_norm, b_norm, norm_coeffs = lay.norm_rows(config.p, t_start)
    A_budget = norm_coeffs[None, :]
    b_budget = np.array([config.frac * m])

    A_eq, b_eq = lay.row_stochastic()
    A_ub = np.vstack([A_s, pad(A_norm, n), A_budget])
    b_ub = np.concatenate([np.zeros(r + m), b_norm, b_budget])
    prob = LpProblem(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, bounds=lay.bounds)
    return prob, lay


def solve_threshmcoss(
    instance: SelectionInstance, config: SelectionConfig
) -> tuple[ThreshSolution, RepresentativeReport]:
    require_valid(instance)
    m, r = instance.m, instance.r
    min_frac = min_feasible_frac(m, r, config.p)
    if config.frac * m < min_frac * m - config.feasibility_tol:
        raise BudgetError(config.frac, min_frac, config.p)

    prob, lay = build_thresh_lp(instance, config)
    sol = solve_lp(prob, config.feasibility_tol)
    if sol.status == INFEASIBLE:
        raise BudgetError(config.frac, min_frac, config.p)
    if sol.status != OPTIMAL:
        raise SolverError(f"threshmcoss: LP status {sol.status}")

    assignment = lay.unpack(sol.x)
    # report the credits implied by the masses; at an optimum they agree
    # with the LP's auxiliary variables
    s_old = compute_s(assignment.mass_old(), config.epsilon)
    s_new = compute_s(assignment.mass_new(), config.epsilon)
    usage = float(column_norms(assignment.z_new, config.p).sum())
    objective = eval_thresh_objective(assignment, instance, config)
    tsol = ThreshSolution(
        assignment=assignment,
        s_old=s_old,
        s_new=s_new,
        objective_value=objective,
        budget_usage=usage,
    )
    mass = assignment.mass_new()
    cap = math.ceil(config.frac * m - 1e-12)
    selected = cap_selection(
        select_columns(mass, config.rounding_threshold), mass, instance.loss_new, cap
    )
    report = RepresentativeReport(
        selected_new=selected,
        column_mass=mass,
        objective_value=objective,
        status=sol.status,
        iterations=sol.iterations,
        extra={
            "lp_objective": sol.objective_value,
            "lp_s_old": lay.block(sol.x, "s_old").copy(),
            "lp_s_new": lay.block(sol.x, "s_new").copy(),
            "budget": config.frac * m,
            "budget_columns": cap,
            "uncapped_selected": select_columns(mass, config.rounding_threshold),
        },
    )
    return tsol, report


def thresh_solution_json(
    solution: ThreshSolution, report: RepresentativeReport, config: SelectionConfig
) -> dict[str, Any]:
    out = solution_json(solution.assignment, report, "threshmcoss", config)
    out["s_new"] = solution.s_new.tolist()
    out["s_old"] = solution.s_old.tolist()
    out["budget_usage"] = solution.budget_usage
    return out


def _verdict(margin: float) -> str:
    """Verdict for a check that passes when ``margin`` is positive."""
    if abs(margin) < TIE_TOL:
        return "inconclusive"
    return "pass" if margin > 0 else "fail"


def check_supp_theorem_conditions(
    solution: ThreshSolution, instance: SelectionInstance, config: SelectionConfig
) -> list[dict[str, Any]]:
    """Necessary conditions for a new column to be chosen by the thresholded LP.

    For each selected column ``j``: (a) its mass reaches epsilon; (b) for
    each incoming row ``i`` the cost comparison against the best old column
    ``k``, evaluated per (i, j) pair. Condition (b) is non-strict, so a
    margin within 1e-9 of zero is reported inconclusive.
    """
    z = solution.assignment
    rho, eps = config.rho, config.epsilon
    mass = z.mass_new()
    selected = select_columns(mass, config.rounding_threshold)
    s_old = compute_s(z.mass_old(), eps)
    s_new = compute_s(mass, eps)
    k = None
    if instance.r > 0:
        old_cost = rho * np.sum(z.z_old * instance.d_old, axis=0) - (1.0 - rho) * s_old * instance.loss_old
        k = int(np.argmin(old_cost))

    report = []
    for j in selected:
        entry: dict[str, Any] = {"j": j, "mass": float(mass[j])}
        entry["cond_a"] = "pass" if mass[j] >= eps - 1e-6 else "fail"
        if k is None:
            entry["cond_b"] = "not-applicable"
            entry["pairs"] = []
        else:
            lhs = rho * float(z.z_new[:, j] @ instance.d_new[:, j]) - (1.0 - rho) * s_new[j] * instance.loss_new[j]
            pairs = []
            for i in range(instance.m):
                slack = max(
                    abs(instance.d_old[i, k] - instance.d_new[i, j]),
                    abs(instance.loss_old[k] - instance.loss_new[j]),
                )
                # the printed inequality pairs z_new with an old index; the old
                # block is the only one k can index
                rhs = (
                    float(z.z_old[:, k] @ instance.d_old[:, k])
                    - (1.0 - rho) * s_old[k] * instance.loss_old[k]
                    + slack
                )
                pairs.append({"i": i, "verdict": _verdict(rhs - lhs), "margin": rhs - lhs})
            verdicts = {p["verdict"] for p in pairs}
            entry["cond_b"] = (
                "pass" if verdicts == {"pass"} else "fail" if "fail" in verdicts else "inconclusive"
            )
            entry["pairs"] = pairs
        entry["k"] = k
        report.append(entry)
    return report
