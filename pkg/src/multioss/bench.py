"""Synthetic instances and the three-way method comparison.

All methods are scored on the set function ``f(S)``: it is defined on bare
selections, so the convex solvers' rounded sets and the greedy's sets can
be compared on one scale.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import SelectionConfig, SelectionInstance, build_q, fmt_real
from .mcoss import solve_mcoss
from .stream import submod_k
from .submodular import eval_f, greedy_select
from .thresh import solve_threshmcoss

COMMON_METRIC = "f_set_function"


def generate_synthetic(m: int, r: int, seed: int) -> SelectionInstance:
    """Uniform [0, 1] dissimilarities and losses, fully determined by ``seed``.

    The new block mirrors its upper triangle and has a zero diagonal.
    """
    if m < 1 or r < 0:
        raise ValueError(f"need m >= 1 and r >= 0, got m={m}, r={r}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.uniform(size=(m, m)), k=1)
    d_new = upper + upper.T
    d_old = rng.uniform(size=(m, r))
    loss_new = rng.uniform(size=m)
    loss_old = rng.uniform(size=r)
    return SelectionInstance.build(d_new=d_new, loss_new=loss_new, d_old=d_old, loss_old=loss_old)


def run_seed(instance_seed: int, run: int) -> int:
    return int(np.random.SeedSequence([instance_seed, run]).generate_state(1, np.uint64)[0])


@dataclass
class ComparisonRow:
    instance_id: int
    f_mcoss: float
    f_thresh: float
    f_submod_runs: list[float]
    common_metric: str = COMMON_METRIC
    selected: dict[str, list[int]] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def submod_median(self) -> float:
        return float(np.median(self.f_submod_runs)) if self.f_submod_runs else math.nan


def _f_or_error(selected, q, row: ComparisonRow, method: str) -> float:
    try:
        return eval_f(selected, q)
    except ValueError as exc:
        row.errors[method] = str(exc)
        return math.nan


def compare_methods(
    instances: Sequence[tuple[int, SelectionInstance]],
    config: SelectionConfig,
    submod_runs: int = 100,
) -> list[ComparisonRow]:
    """Score MCOSS, ThreshMCOSS and repeated greedy runs on ``f(S)``.

    ``instances`` pairs an id (used to seed the greedy runs) with data.
    Solver failures are recorded on the row and the run continues.
    """
    if submod_runs < 1:
        raise ValueError("submod_runs must be >= 1")
    rows = []
    for inst_id, inst in instances:
        q = build_q(inst, config.rho)
        row = ComparisonRow(instance_id=inst_id, f_mcoss=math.nan, f_thresh=math.nan, f_submod_runs=[])
        try:
            _, rep = solve_mcoss(inst, config)
            row.selected["mcoss"] = rep.selected_new
            row.f_mcoss = _f_or_error(rep.selected_new, q, row, "mcoss")
        except (ValueError, RuntimeError) as exc:
            row.errors["mcoss"] = str(exc)
        try:
            _, rep = solve_threshmcoss(inst, config)
            row.selected["threshmcoss"] = rep.selected_new
            row.f_thresh = _f_or_error(rep.selected_new, q, row, "threshmcoss")
        except (ValueError, RuntimeError) as exc:
            row.errors["threshmcoss"] = str(exc)
        k = submod_k(config.frac, inst.m)
        for run in range(submod_runs):
            chosen = greedy_select(q, k, run_seed(inst_id, run))
            row.f_submod_runs.append(eval_f(chosen, q))
        rows.append(row)
    return rows


def comparison_csv(rows: Sequence[ComparisonRow], meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance_id", "method", "run", "f_value"])
    for row in rows:
        w.writerow([row.instance_id, "mcoss", 0, fmt_real(row.f_mcoss)])
        w.writerow([row.instance_id, "threshmcoss", 0, fmt_real(row.f_thresh)])
        for run, val in enumerate(row.f_submod_runs):
            w.writerow([row.instance_id, "submcoss", run, fmt_real(val)])
    for row in rows:
        for method, msg in sorted(row.errors.items()):
            buf.write(f"# error instance={row.instance_id} method={method}: {msg}\n")
    return buf.getvalue()
