"""Problem data for one batch step: dissimilarities, losses and knobs.

The old block indexes the current representative set (``r`` columns) and
the new block indexes the incoming batch (``m`` columns). Rows always
index incoming frames.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

INF = math.inf


class InstanceError(ValueError):
    """Raised for malformed instance data or configuration."""


def _as_matrix(a: Any, rows: int | None = None) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(rows if rows is not None else 0, 0)
    if arr.ndim != 2:
        raise InstanceError(f"expected a matrix, got shape {arr.shape}")
    return arr


def _as_vector(a: Any) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64).reshape(-1)
    return arr


def _frozen(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SelectionInstance:
    d_old: NDArray[np.float64]
    d_new: NDArray[np.float64]
    loss_old: NDArray[np.float64]
    loss_new: NDArray[np.float64]

    def __post_init__(self) -> None:
        d_new = _as_matrix(self.d_new)
        m = d_new.shape[0]
        object.__setattr__(self, "d_new", _frozen(d_new))
        object.__setattr__(self, "d_old", _frozen(_as_matrix(self.d_old, rows=m)))
        object.__setattr__(self, "loss_old", _frozen(_as_vector(self.loss_old)))
        object.__setattr__(self, "loss_new", _frozen(_as_vector(self.loss_new)))

    @classmethod
    def build(cls, d_new, loss_new, d_old=None, loss_old=None) -> "SelectionInstance":
        """Construct an instance, defaulting to an empty old set."""
        d_new = _as_matrix(d_new)
        m = d_new.shape[0]
        if d_old is None:
            d_old = np.zeros((m, 0))
        if loss_old is None:
            loss_old = np.zeros(0)
        return cls(d_old=d_old, d_new=d_new, loss_old=loss_old, loss_new=loss_new)

    @property
    def m(self) -> int:
        return self.d_new.shape[0]

    @property
    def r(self) -> int:
        return self.loss_old.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SelectionInstance):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in (
                (self.d_old, other.d_old),
                (self.d_new, other.d_new),
                (self.loss_old, other.loss_old),
                (self.loss_new, other.loss_new),
            )
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "d_new": self.d_new.tolist(),
            "loss_new": self.loss_new.tolist(),
        }
        if self.r > 0:
            out["d_old"] = self.d_old.tolist()
            out["loss_old"] = self.loss_old.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SelectionInstance":
        if "d_new" not in data or "loss_new" not in data:
            raise InstanceError("instance JSON needs 'd_new' and 'loss_new'")
        return cls.build(
            d_new=data["d_new"],
            loss_new=data["loss_new"],
            d_old=data.get("d_old"),
            loss_old=data.get("loss_old"),
        )


def check_p(p: float) -> float:
    p = float(p)
    if p not in (1.0, INF):
        raise InstanceError(f"p must be 1 or inf, got {p}")
    return p


@dataclass(frozen=True)
class SelectionConfig:
    """Formulation knobs shared by every solver.

    ``rounding_threshold`` defaults to ``epsilon`` when left as None.
    """

    rho: float = 0.9
    lam: float = 0.5
    p: float = INF
    epsilon: float = 0.9
    frac: float = 0.2
    rounding_threshold: float | None = None
    feasibility_tol: float = 1e-8

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", check_p(self.p))
        if self.rounding_threshold is None:
            object.__setattr__(self, "rounding_threshold", self.epsilon)
        if not 0.0 <= self.rho <= 1.0:
            raise InstanceError(f"rho must lie in [0, 1], got {self.rho}")
        if self.lam < 0.0:
            raise InstanceError(f"lambda must be nonnegative, got {self.lam}")
        for name in ("epsilon", "frac", "rounding_threshold"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InstanceError(f"{name} must lie in (0, 1], got {v}")
        if self.feasibility_tol <= 0.0:
            raise InstanceError("feasibility_tol must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "lambda": self.lam,
            "p": "inf" if self.p == INF else 1,
            "epsilon": self.epsilon,
            "frac": self.frac,
            "rounding_threshold": self.rounding_threshold,
            "feasibility_tol": self.feasibility_tol,
        }

    def replace(self, **changes: Any) -> "SelectionConfig":
        fields = {
            "rho": self.rho,
            "lam": self.lam,
            "p": self.p,
            "epsilon": self.epsilon,
            "frac": self.frac,
            "rounding_threshold": self.rounding_threshold,
            "feasibility_tol": self.feasibility_tol,
        }
        # a threshold tied to epsilon keeps following it
        if "epsilon" in changes and "rounding_threshold" not in changes:
            if self.rounding_threshold == self.epsilon:
                fields["rounding_threshold"] = None
        fields.update(changes)
        return SelectionConfig(**fields)


@dataclass(frozen=True)
class QMatrices:
    q_old: NDArray[np.float64]
    q_new: NDArray[np.float64]


def build_q(instance: SelectionInstance, rho: float) -> QMatrices:
    """Cumulative dissimilarity: rho * d - (1 - rho) * loss of the column."""
    if not 0.0 <= rho <= 1.0:
        raise InstanceError(f"rho must lie in [0, 1], got {rho}")
    q_old = rho * instance.d_old - (1.0 - rho) * instance.loss_old[None, :]
    q_new = rho * instance.d_new - (1.0 - rho) * instance.loss_new[None, :]
    return QMatrices(q_old=q_old, q_new=q_new)


def validate(instance: SelectionInstance) -> list[str]:
    """Return every violated instance invariant; an empty list means ok."""
    problems: list[str] = []
    m, r = instance.m, instance.r
    if instance.d_new.shape != (m, m):
        problems.append(f"d_new shape {instance.d_new.shape} is not square")
    if instance.d_old.shape != (m, r):
        problems.append(f"d_old shape {instance.d_old.shape} != ({m}, {r})")
    if instance.loss_new.shape != (m,):
        problems.append(f"loss_new length {instance.loss_new.shape[0]} != {m}")
    for name in ("d_old", "d_new", "loss_old", "loss_new"):
        arr = getattr(instance, name)
        if not np.all(np.isfinite(arr)):
            problems.append(f"non-finite entries in {name}")
    for name in ("d_old", "d_new"):
        for i, j in np.argwhere(getattr(instance, name) < 0):
            problems.append(f"negative dissimilarity in {name} at i={i}, j={j}")
    if instance.d_new.shape == (m, m):
        for i in np.flatnonzero(np.diag(instance.d_new) != 0):
            problems.append(f"nonzero diagonal at i={i}")
    for name in ("loss_old", "loss_new"):
        for j in np.flatnonzero(getattr(instance, name) < 0):
            problems.append(f"negative loss at j={j} ({name})")
    return problems


def require_valid(instance: SelectionInstance) -> None:
    problems = validate(instance)
    if problems:
        raise InstanceError("; ".join(problems))


def shift_nonnegative(losses: Sequence[float]) -> tuple[NDArray[np.float64], float]:
    """Shift losses up by their minimum when it is negative; return (losses, shift)."""
    arr = np.asarray(losses, dtype=np.float64)
    if arr.size == 0:
        return arr.copy(), 0.0
    low = float(arr.min())
    shift = -low if low < 0.0 else 0.0
    return arr + shift, shift


@dataclass(frozen=True)
class FrameRecord:
    id: str
    features: tuple[float, ...]
    loss: float | None = None
    batch_index: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(float(f) for f in self.features))
        if self.batch_index < 1:
            raise InstanceError(f"batch index must be >= 1 (frame {self.id})")

    @property
    def vector(self) -> NDArray[np.float64]:
        return np.asarray(self.features, dtype=np.float64)


def _feature_matrix(frames: Sequence[FrameRecord]) -> NDArray[np.float64]:
    dims = {len(f.features) for f in frames}
    if len(dims) != 1:
        raise InstanceError(f"feature dimension mismatch: {sorted(dims)}")
    return np.array([f.features for f in frames], dtype=np.float64)


def euclidean(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def minmax(dist: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rescale into [0, 1] over the whole matrix.

    A constant matrix maps to zeros when the constant is 0, else to ones.
    """
    if dist.size == 0:
        return dist.copy()
    lo, hi = float(dist.min()), float(dist.max())
    if hi > lo:
        return (dist - lo) / (hi - lo)
    return np.zeros_like(dist) if hi == 0.0 else np.ones_like(dist)


def dissimilarity_from_features(
    frames_a: Sequence[FrameRecord], frames_b: Sequence[FrameRecord]
) -> NDArray[np.float64]:
    """Min-max normalised Euclidean distances between two frame lists."""
    if not frames_a or not frames_b:
        raise InstanceError("dissimilarity needs two nonempty frame lists")
    fa = _feature_matrix(frames_a)
    fb = _feature_matrix(frames_b)
    if fa.shape[1] != fb.shape[1]:
        raise InstanceError(
            f"feature dimension mismatch: {fa.shape[1]} vs {fb.shape[1]}"
        )
    dist = euclidean(fa, fb)
    if frames_a is frames_b:
        np.fill_diagonal(dist, 0.0)
        dist = 0.5 * (dist + dist.T)
    return minmax(dist)


# ---------------------------------------------------------------------------
# serialization


def save_instance(instance: SelectionInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict()) + "\n", encoding="utf-8")


def load_instance(path: str | Path) -> SelectionInstance:
    with open(path, encoding="utf-8") as fh:
        return SelectionInstance.from_dict(json.load(fh))


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def read_stream_csv(path: str | Path) -> list[list[FrameRecord]]:
    """Read ``id,batch,loss,f0,f1,...`` rows into batches ordered by batch index."""
    batches: dict[int, list[FrameRecord]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["id", "batch", "loss"]:
            raise InstanceError("stream CSV header must start with id,batch,loss")
        n_feat = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_feat + 3:
                raise InstanceError(f"line {lineno}: expected {n_feat + 3} fields")
            loss = float(row[2]) if row[2].strip() else None
            rec = FrameRecord(
                id=row[0],
                features=tuple(float(v) for v in row[3:]),
                loss=loss,
                batch_index=int(row[1]),
            )
            batches.setdefault(rec.batch_index, []).append(rec)
    return [batches[t] for t in sorted(batches)]


def write_stream_csv(frames: Sequence[FrameRecord], path: str | Path) -> None:
    n_feat = len(frames[0].features) if frames else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "batch", "loss"] + [f"f{k}" for k in range(n_feat)])
        for f in frames:
            loss = "" if f.loss is None else fmt_real(f.loss)
            writer.writerow(
                [f.id, f.batch_index, loss] + [fmt_real(v) for v in f.features]
            )
