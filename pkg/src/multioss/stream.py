"""Online selection loop over a sequence of frame batches.

At every step the scorer refreshes losses for the batch and for the
current representatives, dissimilarities are built over
``batch x (representatives + batch)``, the chosen method is solved and
every new column whose representativeness reaches the threshold joins the
representative set. Representatives are never removed.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

import numpy as np

from .instance import (
    FrameRecord,
    InstanceError,
    SelectionConfig,
    SelectionInstance,
    build_q,
    dissimilarity_from_features,
    euclidean,
    shift_nonnegative,
)
from .mcoss import select_columns, solve_mcoss
from .submodular import eval_f, greedy_select, induced_assignment
from .thresh import solve_threshmcoss

METHODS = ("mcoss", "threshmcoss", "submcoss")


class Scorer(Protocol):
    def __call__(
        self, frames: Sequence[FrameRecord], representatives: Sequence[FrameRecord]
    ) -> np.ndarray: ...


class ScorerError(RuntimeError):
    pass


def residual_scorer(
    frames: Sequence[FrameRecord], representatives: Sequence[FrameRecord]
) -> np.ndarray:
    """Squared distance to the nearest representative, scaled by the batch max.

    With no representatives the batch mean stands in.
    """
    if not frames:
        return np.zeros(0)
    feats = np.array([f.features for f in frames], dtype=np.float64)
    if representatives:
        ref = np.array([f.features for f in representatives], dtype=np.float64)
    else:
        ref = feats.mean(axis=0, keepdims=True)
    sq = euclidean(feats, ref).min(axis=1) ** 2
    top = float(sq.max())
    return sq / top if top > 0 else np.zeros_like(sq)


def precomputed_scorer(
    frames: Sequence[FrameRecord], representatives: Sequence[FrameRecord] = ()
) -> np.ndarray:
    missing = [f.id for f in frames if f.loss is None]
    if missing:
        raise ScorerError(f"frame {missing[0]} has no stored loss")
    shifted, _ = shift_nonnegative([f.loss for f in frames])
    return shifted


@dataclass
class StepRecord:
    t: int
    objective: float
    selected: list[str]
    r_size: int
    ms: int | None

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(
            {
                "t": self.t,
                "objective": self.objective,
                "selected": self.selected,
                "r_size": self.r_size,
                "ms": self.ms if timing else None,
            }
        )


@dataclass
class StreamState:
    representatives: list[FrameRecord] = field(default_factory=list)
    t: int = 0
    history: list[StepRecord] = field(default_factory=list)

    def add(self, frames: Sequence[FrameRecord]) -> None:
        known = {f.id for f in self.representatives}
        for f in frames:
            if f.id in known:
                raise InstanceError(f"duplicate representative id {f.id}")
            known.add(f.id)
            self.representatives.append(f)

    def history_jsonl(self, timing: bool = False) -> str:
        return "".join(rec.to_json(timing) + "\n" for rec in self.history)


def step_instance(
    batch: Sequence[FrameRecord],
    representatives: Sequence[FrameRecord],
    scorer: Scorer,
) -> SelectionInstance:
    loss_new = np.asarray(scorer(batch, representatives), dtype=np.float64)
    loss_old = (
        np.asarray(scorer(representatives, representatives), dtype=np.float64)
        if representatives
        else np.zeros(0)
    )
    loss_all, _ = shift_nonnegative(np.concatenate([loss_old, loss_new]))
    r = len(representatives)
    columns = list(representatives) + list(batch)
    d = dissimilarity_from_features(batch, columns)
    d_new = d[:, r:].copy()
    np.fill_diagonal(d_new, 0.0)
    return SelectionInstance.build(
        d_new=d_new,
        loss_new=loss_all[r:],
        d_old=d[:, :r],
        loss_old=loss_all[:r],
    )


def solve_step(
    instance: SelectionInstance, config: SelectionConfig, method: str, seed: int
) -> tuple[float, list[int]]:
    """Objective and chosen new columns for one batch."""
    if method == "mcoss":
        _, report = solve_mcoss(instance, config)
        return report.objective_value, report.selected_new
    if method == "threshmcoss":
        _, report = solve_threshmcoss(instance, config)
        return report.objective_value, report.selected_new
    if method == "submcoss":
        q = build_q(instance, config.rho)
        k = submod_k(config.frac, instance.m)
        chosen = greedy_select(q, k, seed)
        _, z_new = induced_assignment(chosen, q)
        used = select_columns(z_new.sum(axis=0), config.rounding_threshold)
        return eval_f(chosen, q), used
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def submod_k(frac: float, m: int) -> int:
    """Cardinality for the greedy: ceil(frac * m), clipped to 1..m."""
    return min(m, max(1, math.ceil(frac * m - 1e-12)))


def run_stream(
    batches: Sequence[Sequence[FrameRecord]],
    scorer: Scorer,
    config: SelectionConfig,
    method: str = "threshmcoss",
    seed: int = 0,
    initial: Sequence[FrameRecord] = (),
    clock: Callable[[], float] = time.perf_counter,
) -> StreamState:
    if not batches:
        raise ValueError("run_stream needs at least one batch")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    state = StreamState()
    state.add(initial)
    for t, batch in enumerate(batches, start=1):
        start = clock()
        try:
            instance = step_instance(batch, state.representatives, scorer)
        except ScorerError as exc:
            raise ScorerError(f"step {t}: {exc}") from exc
        objective, chosen = solve_step(instance, config, method, seed + t)
        added = [batch[j] for j in chosen]
        state.add(added)
        state.t = t
        state.history.append(
            StepRecord(
                t=t,
                objective=objective,
                selected=[f.id for f in added],
                r_size=len(state.representatives),
                ms=int(round((clock() - start) * 1000)),
            )
        )
    return state


def synthetic_stream(
    seed: int = 0,
    batches: int = 4,
    scenes: int = 12,
    dim: int = 2,
    jitter: float = 0.05,
) -> list[list[FrameRecord]]:
    """A route driven ``batches`` times: every batch revisits the same scenes.

    Scene centres are uniform in [-5, 5]^dim; each pass shuffles the scene
    order and adds Gaussian jitter, so representatives kept from earlier
    passes cover more of each new batch.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-5.0, 5.0, size=(scenes, dim))
    out = []
    for t in range(1, batches + 1):
        order = rng.permutation(scenes)
        feats = centres[order] + rng.normal(scale=jitter, size=(scenes, dim))
        out.append(
            [
                FrameRecord(id=f"t{t}_{i}", features=tuple(feats[i]), batch_index=t)
                for i in range(scenes)
            ]
        )
    return out
