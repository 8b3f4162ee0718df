"""Candidate tests, additive sufficient statistics and split quality scores.

Statistics are kept per held-out part D_i so that per-training-set matrices
can be derived by subtraction (S(T_i) = S(D) - S(D_i)) without revisiting the
data.  Class-target statistics are exact integer counts; numeric targets use
the (sum(y^2), sum(y), count) triple from which variance is recoverable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import DISCRETE, NUMERIC, Dataset, FoldAssignment

#: columns of a numeric-target statistics row
SUM_Y2, SUM_Y, COUNT = 0, 1, 2

# Relative slack used when deciding that a numeric target set has zero
# variance; float accumulation makes exact zero unreliable.
_PURITY_RTOL = 1e-12


@dataclass(frozen=True)
class Test:
    """A total test mapping every schema-conforming example to an outcome index.

    Either a discrete-attribute test (one outcome per domain value) or a
    numeric threshold test ``attr < threshold`` (outcome 0 when true).
    """

    attr_index: int
    attr_name: str
    kind: str
    arity: int
    threshold: float | None = None

    def outcomes(self, dataset: Dataset, idx: np.ndarray) -> np.ndarray:
        col = dataset.columns[self.attr_index]
        if self.kind == DISCRETE:
            return col[idx]
        return (col[idx] >= self.threshold).astype(np.int64)

    def outcome_single(self, value) -> int:
        """Outcome for one raw (decoded) attribute value."""
        if self.kind == DISCRETE:
            return int(value)
        return 0 if float(value) < self.threshold else 1

    def describe(self) -> str:
        if self.kind == DISCRETE:
            return self.attr_name
        return f"{self.attr_name} < {self.threshold:g}"


class Counters:
    """Instrumentation shared by the serial and forest builders."""

    __slots__ = (
        "evaluations",
        "partitions",
        "data_passes",
        "stats_seconds",
        "partition_seconds",
    )

    def __init__(self):
        self.evaluations = 0
        self.partitions = 0
        self.data_passes = 0
        self.stats_seconds = 0.0
        self.partition_seconds = 0.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__slots__}


def enumerate_tests(dataset: Dataset, node_examples: np.ndarray) -> list[Test]:
    """Candidate tests for a node, in deterministic order.

    One test per discrete attribute (attribute schema order); for each numeric
    attribute one threshold per midpoint between consecutive distinct values
    observed in ``node_examples``, ascending.  The position in the returned
    list is the test id used for tie-breaking.
    """
    if len(node_examples) == 0:
        raise ValueError("cannot enumerate tests for an empty node")
    tests: list[Test] = []
    for a, spec in enumerate(dataset.schema.attributes):
        if spec.kind == DISCRETE:
            tests.append(Test(a, spec.name, DISCRETE, arity=len(spec.domain)))
        else:
            values = np.unique(dataset.columns[a][node_examples])
            for lo, hi in zip(values[:-1], values[1:]):
                tests.append(
                    Test(a, spec.name, NUMERIC, arity=2, threshold=float((lo + hi) / 2.0))
                )
    return tests


@dataclass
class StatisticsMatrix:
    """Additive per-(outcome, target) sufficient statistics.

    ``kind == "class"``: integer counts of shape (arity, n_classes).
    ``kind == "numeric"``: float rows (sum_y2, sum_y, count) of shape (arity, 3).
    """

    kind: str
    data: np.ndarray

    @classmethod
    def zeros(cls, kind: str, arity: int, n_classes: int = 0) -> "StatisticsMatrix":
        if kind == "class":
            return cls(kind, np.zeros((arity, n_classes), dtype=np.int64))
        return cls(kind, np.zeros((arity, 3), dtype=np.float64))

    @property
    def arity(self) -> int:
        return self.data.shape[0]

    def total_count(self) -> float:
        if self.kind == "class":
            return int(self.data.sum())
        return float(self.data[:, COUNT].sum())

    def __add__(self, other: "StatisticsMatrix") -> "StatisticsMatrix":
        self._check(other)
        return StatisticsMatrix(self.kind, self.data + other.data)

    def __sub__(self, other: "StatisticsMatrix") -> "StatisticsMatrix":
        self._check(other)
        return StatisticsMatrix(self.kind, self.data - other.data)

    def _check(self, other: "StatisticsMatrix"):
        if self.kind != other.kind or self.data.shape != other.data.shape:
            raise ValueError("statistics matrices have mismatched shape")

    def copy(self) -> "StatisticsMatrix":
        return StatisticsMatrix(self.kind, self.data.copy())


def update_statistics(S: StatisticsMatrix, outcome: int, target) -> StatisticsMatrix:
    """Record one example: an O(1) single-cell (or single-row) increment."""
    if not 0 <= outcome < S.arity:
        raise ValueError(f"outcome {outcome} out of range 0..{S.arity - 1}")
    if S.kind == "class":
        S.data[outcome, int(target)] += 1
    else:
        y = float(target)
        S.data[outcome] += (y * y, y, 1.0)
    return S


def _target_width(dataset: Dataset) -> int:
    return dataset.schema.n_classes if dataset.schema.target_kind == "class" else 3


def target_statistics(dataset: Dataset, idx: np.ndarray) -> np.ndarray:
    """Target-only statistics of one example set.

    Class target: per-class counts.  Numeric target: (sum_y2, sum_y, count).
    """
    if dataset.schema.target_kind == "class":
        return np.bincount(dataset.target[idx], minlength=dataset.schema.n_classes).astype(
            np.int64
        )
    y = dataset.target[idx]
    out = np.empty(3, dtype=np.float64)
    out[SUM_Y2] = np.add.reduce(y * y)
    out[SUM_Y] = np.add.reduce(y)
    out[COUNT] = len(y)
    return out


def target_statistics_by_part(
    dataset: Dataset, folds: FoldAssignment, idx: np.ndarray
) -> np.ndarray:
    """Target statistics split by held-out part: shape (n, width)."""
    part = folds.fold_of[idx] - 1
    n = folds.n
    if dataset.schema.target_kind == "class":
        C = dataset.schema.n_classes
        key = part * C + dataset.target[idx]
        return np.bincount(key, minlength=n * C).reshape(n, C).astype(np.int64)
    y = dataset.target[idx]
    out = np.empty((n, 3), dtype=np.float64)
    out[:, SUM_Y2] = np.bincount(part, weights=y * y, minlength=n)
    out[:, SUM_Y] = np.bincount(part, weights=y, minlength=n)
    out[:, COUNT] = np.bincount(part, minlength=n)
    return out


def accumulate_statistics(
    dataset: Dataset,
    node_examples: np.ndarray,
    tests: Sequence[Test],
    counters: Counters | None = None,
) -> list[np.ndarray]:
    """Single-set statistics: one (arity, width) array per test."""
    t0 = time.perf_counter()
    idx = node_examples
    out: list[np.ndarray] = []
    if dataset.schema.target_kind == "class":
        C = dataset.schema.n_classes
        y = dataset.target[idx]
        for t in tests:
            key = t.outcomes(dataset, idx) * C + y
            out.append(np.bincount(key, minlength=t.arity * C).reshape(t.arity, C))
    else:
        y = dataset.target[idx]
        y2 = y * y
        for t in tests:
            o = t.outcomes(dataset, idx)
            m = np.empty((t.arity, 3), dtype=np.float64)
            m[:, SUM_Y2] = np.bincount(o, weights=y2, minlength=t.arity)
            m[:, SUM_Y] = np.bincount(o, weights=y, minlength=t.arity)
            m[:, COUNT] = np.bincount(o, minlength=t.arity)
            out.append(m)
    if counters is not None:
        counters.evaluations += len(tests) * len(idx)
        counters.stats_seconds += time.perf_counter() - t0
    return out


def accumulate_fold_statistics(
    dataset: Dataset,
    folds: FoldAssignment,
    node_examples: np.ndarray,
    tests: Sequence[Test],
    counters: Counters | None = None,
) -> list[np.ndarray]:
    """Per-part statistics: one (n, arity, width) array per test.

    Each example is evaluated against each test exactly once and contributes
    only to the matrix of its own held-out part, so the evaluation counter
    grows by ``len(tests) * len(node_examples)``.
    """
    t0 = time.perf_counter()
    idx = node_examples
    n = folds.n
    part = folds.fold_of[idx] - 1
    out: list[np.ndarray] = []
    if dataset.schema.target_kind == "class":
        C = dataset.schema.n_classes
        y = dataset.target[idx]
        base_by_arity: dict[int, np.ndarray] = {}
        for t in tests:
            base = base_by_arity.get(t.arity)
            if base is None:
                base = part * (t.arity * C) + y
                base_by_arity[t.arity] = base
            key = t.outcomes(dataset, idx) * C + base
            out.append(np.bincount(key, minlength=n * t.arity * C).reshape(n, t.arity, C))
    else:
        y = dataset.target[idx]
        y2 = y * y
        for t in tests:
            key = part * t.arity + t.outcomes(dataset, idx)
            m = np.empty((n, t.arity, 3), dtype=np.float64)
            size = n * t.arity
            m[:, :, SUM_Y2] = np.bincount(key, weights=y2, minlength=size).reshape(n, t.arity)
            m[:, :, SUM_Y] = np.bincount(key, weights=y, minlength=size).reshape(n, t.arity)
            m[:, :, COUNT] = np.bincount(key, minlength=size).reshape(n, t.arity)
            out.append(m)
    if counters is not None:
        counters.evaluations += len(tests) * len(idx)
        counters.stats_seconds += time.perf_counter() - t0
    return out


def derive_training_arrays(per_part: np.ndarray) -> np.ndarray:
    """From (n, arity, width) per-part statistics to (n+1, arity, width).

    Row 0 is the pooled total; row i (i >= 1) is total minus part i.  No data
    access is needed.
    """
    n = per_part.shape[0]
    total = per_part.sum(axis=0)
    out = np.empty((n + 1,) + total.shape, dtype=per_part.dtype)
    out[0] = total
    out[1:] = total[None, ...] - per_part
    return out


def derive_training_statistics(
    per_part: Sequence[StatisticsMatrix],
) -> list[StatisticsMatrix]:
    """Matrix-object form of :func:`derive_training_arrays`."""
    if not per_part:
        raise ValueError("need at least one per-part matrix")
    first = per_part[0]
    for m in per_part[1:]:
        first._check(m)
    stacked = np.stack([m.data for m in per_part])
    derived = derive_training_arrays(stacked)
    return [StatisticsMatrix(first.kind, d) for d in derived]


def _entropy(counts: np.ndarray) -> float:
    """Shannon entropy in bits with the 0*log(0) = 0 convention."""
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _xlog2(x: np.ndarray) -> np.ndarray:
    """Elementwise x*log2(x) with the 0*log(0) = 0 convention."""
    return np.where(x > 0, x, 1.0) * np.log2(np.where(x > 0, x, 1.0))


def quality_rows(stack: np.ndarray, kind: str, measure: str) -> np.ndarray:
    """Split quality for a stack of statistics arrays at once.

    ``stack`` has shape (k, arity, width); returns k scores.  Entropies are
    expanded into x*log2(x) sums so the whole computation vectorizes:
    gain = (T log T - sum xlog(class marginal) - sum xlog(outcome sizes)
            + sum xlog(cells)) / T.
    """
    if kind == "class":
        if measure not in ("gain", "gainratio"):
            raise ValueError(f"measure {measure!r} needs a class target")
        data = stack.astype(np.float64)
        totals = data.sum(axis=(1, 2))
        if np.any(totals <= 0):
            raise ValueError("quality undefined for empty statistics")
        sizes = data.sum(axis=2)
        marginal = data.sum(axis=1)
        xl_total = _xlog2(totals)
        xl_sizes = _xlog2(sizes).sum(axis=1)
        gain = (xl_total - _xlog2(marginal).sum(axis=1) - xl_sizes
                + _xlog2(data).sum(axis=(1, 2))) / totals
        if measure == "gain":
            return gain
        split_info = (xl_total - xl_sizes) / totals
        return np.where(split_info > 0, gain / np.where(split_info > 0, split_info, 1.0), 0.0)
    if measure != "variance":
        raise ValueError(f"measure {measure!r} needs a numeric target")
    total_rows = stack.sum(axis=1)  # (k, 3)
    totals = total_rows[:, COUNT]
    if np.any(totals <= 0):
        raise ValueError("quality undefined for empty statistics")
    mean = total_rows[:, SUM_Y] / totals
    var_total = total_rows[:, SUM_Y2] / totals - mean * mean
    c = stack[:, :, COUNT]
    safe_c = np.where(c > 0, c, 1.0)
    mean_j = stack[:, :, SUM_Y] / safe_c
    var_j = stack[:, :, SUM_Y2] / safe_c - mean_j * mean_j
    weighted = np.where(c > 0, (c / totals[:, None]) * var_j, 0.0)
    return var_total - weighted.sum(axis=1)


def quality_from_array(data: np.ndarray, kind: str, measure: str) -> float:
    """Split quality computed from a statistics array alone."""
    return float(quality_rows(data[None, ...], kind, measure)[0])


def compute_quality(S: StatisticsMatrix, measure: str) -> float:
    return quality_from_array(S.data, S.kind, measure)


def target_count(vec: np.ndarray, kind: str) -> int:
    return int(vec.sum()) if kind == "class" else int(round(vec[COUNT]))


def target_is_pure(vec: np.ndarray, kind: str) -> bool:
    """True when all target values in the summarized set coincide."""
    if kind == "class":
        return int(np.count_nonzero(vec)) <= 1
    c = vec[COUNT]
    if c <= 1:
        return True
    mean = vec[SUM_Y] / c
    var = vec[SUM_Y2] / c - mean * mean
    return var <= _PURITY_RTOL * max(1.0, mean * mean)


def target_prediction(vec: np.ndarray, kind: str):
    """Majority class index (schema-order tie-break) or mean target value."""
    if kind == "class":
        return int(np.argmax(vec))
    c = vec[COUNT]
    return float(vec[SUM_Y] / c) if c > 0 else 0.0


def best_choice_per_fold(
    quality: np.ndarray,
    counts: Sequence[int],
    pure: Sequence[bool],
    min_examples: int,
) -> list[int | None]:
    """Per-fold split decision: a test id, or ``None`` for MAKE-LEAF.

    A fold becomes a leaf when its slice is pure, too small, or no candidate
    scores strictly above zero.  Ties go to the lowest test id (first argmax).
    """
    choices: list[int | None] = []
    for row, cnt, is_pure in zip(quality, counts, pure):
        if is_pure or cnt < min_examples or row.size == 0:
            choices.append(None)
            continue
        best = int(np.argmax(row))
        choices.append(best if row[best] > 0.0 else None)
    return choices
