"""Set-function view of multi-criteria selection and a randomised greedy.

``f(S)`` sums, over incoming rows, the best cumulative dissimilarity
available from either the old set or the chosen new columns ``S``.
Minimising ``f`` is maximising the submodular ``-f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from .instance import QMatrices

SUBMOD_TOL = 1e-9


class EmptyMinimumError(ValueError):
    """Both the old set and the selection are empty."""


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator, the single RNG used for selection."""
    return np.random.Generator(np.random.Philox(int(seed)))


def old_row_min(q: QMatrices) -> NDArray[np.float64]:
    if q.q_old.shape[1] == 0:
        return np.full(q.q_new.shape[0], np.inf)
    return q.q_old.min(axis=1)


def eval_f(selected: Iterable[int], q: QMatrices) -> float:
    sel = sorted(set(int(j) for j in selected))
    m = q.q_new.shape[0]
    if any(j < 0 or j >= m for j in sel):
        raise IndexError(f"selection {sel} is outside 0..{m - 1}")
    if q.q_old.shape[1] == 0 and not sel:
        raise EmptyMinimumError("undefined empty minimum: no old and no selected columns")
    best = old_row_min(q)
    if sel:
        best = np.minimum(best, q.q_new[:, sel].min(axis=1))
    return float(best.sum())


@dataclass
class SubsetState:
    """Selection plus the per-row best value, updated incrementally."""

    q: QMatrices
    selected: list[int] = field(default_factory=list)
    cached_row_min: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        self.cached_row_min = old_row_min(self.q)
        for j in self.selected:
            self.cached_row_min = np.minimum(self.cached_row_min, self.q.q_new[:, j])

    def add(self, j: int) -> None:
        if j in self.selected:
            raise ValueError(f"column {j} already selected")
        self.selected.append(int(j))
        self.cached_row_min = np.minimum(self.cached_row_min, self.q.q_new[:, j])

    def value(self) -> float:
        if not np.all(np.isfinite(self.cached_row_min)):
            raise EmptyMinimumError("undefined empty minimum: no old and no selected columns")
        return float(self.cached_row_min.sum())

    def candidate_values(self, candidates: NDArray[np.int_]) -> NDArray[np.float64]:
        """f(S + {x}) for every candidate x, in one vectorised pass."""
        return np.minimum(self.cached_row_min[:, None], self.q.q_new[:, candidates]).sum(axis=0)


def greedy_select(q: QMatrices, k: int, rng_seed: int) -> list[int]:
    """Randomised greedy over ``k`` rounds.

    Each round scores every unselected column by ``f(S + {x})``, keeps the
    ``k`` lowest (ties by index) and adds one of them uniformly at random.
    """
    m = q.q_new.shape[0]
    if k < 1 or k > m:
        raise ValueError(f"k must satisfy 1 <= k <= m={m}, got {k}")
    rng = make_rng(rng_seed)
    state = SubsetState(q)
    chosen = np.zeros(m, dtype=bool)
    for _ in range(k):
        candidates = np.flatnonzero(~chosen)
        values = state.candidate_values(candidates)
        order = np.lexsort((candidates, values))
        pool = candidates[order[: min(k, candidates.size)]]
        pick = int(pool[rng.integers(pool.size)])
        state.add(pick)
        chosen[pick] = True
    return state.selected


def induced_assignment(selected: Iterable[int], q: QMatrices):
    """Row-to-column map implied by ``f``: each row goes to its best column.

    Ties prefer old columns, then lower indices. Returns (z_old, z_new).
    """
    sel = sorted(set(int(j) for j in selected))
    m, r = q.q_new.shape[0], q.q_old.shape[1]
    z_old = np.zeros((m, r))
    z_new = np.zeros((m, m))
    for i in range(m):
        best_old = int(np.argmin(q.q_old[i])) if r else -1
        best_new = sel[int(np.argmin(q.q_new[i, sel]))] if sel else -1
        if best_new < 0 or (best_old >= 0 and q.q_old[i, best_old] <= q.q_new[i, best_new]):
            if best_old < 0:
                raise EmptyMinimumError("undefined empty minimum")
            z_old[i, best_old] = 1.0
        else:
            z_new[i, best_new] = 1.0
    return z_old, z_new


def check_submodularity(q: QMatrices, trials: int, rng_seed: int, tol: float = SUBMOD_TOL) -> int:
    """Count sampled diminishing-returns violations of ``-f``.

    Samples nested S within T and x outside T, then checks
    ``f(S) - f(S+x) >= f(T) - f(T+x) - tol``. With no old columns, S is
    kept nonempty so every value is defined.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m = q.q_new.shape[0]
    if m < 2 and q.q_old.shape[1] == 0:
        return 0
    rng = make_rng(rng_seed)
    need_nonempty = q.q_old.shape[1] == 0
    violations = 0
    for _ in range(trials):
        perm = rng.permutation(m)
        x = int(perm[-1])
        rest = perm[:-1]
        t_size = int(rng.integers(1 if need_nonempty else 0, rest.size + 1))
        s_size = int(rng.integers(1 if need_nonempty else 0, t_size + 1))
        T = [int(v) for v in rest[:t_size]]
        S = T[:s_size]
        gain_s = eval_f(S, q) - eval_f(S + [x], q)
        gain_t = eval_f(T, q) - eval_f(T + [x], q)
        if gain_s < gain_t - tol:
            violations += 1
    return violations
