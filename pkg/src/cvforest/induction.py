"""Forest induction (all folds at once) and the serial baseline builder.

The forest builders refine every fold's node in a single operation: test
statistics are accumulated once per example over the pooled relevant set and
split by held-out part, per-training-set statistics are derived by
subtraction, and folds that agree on the best test keep sharing the subtree
below.  The serial builder grows one ordinary tree per training set and is
both the timing baseline and the correctness oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, FoldAssignment, training_view
from .forest import (
    BifurcationGroup,
    Forest,
    ForestNode,
    LeafInfo,
    LevelProfile,
    TreeNode,
    group_folds_by_choice,
    partition_examples,
)
from .splits import (
    Counters,
    accumulate_fold_statistics,
    accumulate_statistics,
    derive_training_arrays,
    enumerate_tests,
    quality_from_array,
    quality_rows,
    target_count,
    target_is_pure,
    target_prediction,
    target_statistics,
    target_statistics_by_part,
)

DEPTH_FIRST = "depth"
LEVEL_WISE = "level"


class VerificationError(RuntimeError):
    """Subtraction-derived statistics disagree with direct accumulation."""


@dataclass
class InductionConfig:
    measure: str = "gain"  # gain | gainratio | variance
    min_examples: int = 2
    n_folds: int = 10
    seed: int = 0
    stratified: bool = False
    variant: str = DEPTH_FIRST
    verify_stats: bool = False

    def __post_init__(self):
        if self.min_examples < 1:
            raise ValueError("min_examples must be at least 1")
        if self.measure not in ("gain", "gainratio", "variance"):
            raise ValueError(f"unknown quality measure {self.measure!r}")
        if self.variant not in (DEPTH_FIRST, LEVEL_WISE):
            raise ValueError(f"unknown variant {self.variant!r}")

    def check_target(self, dataset: Dataset):
        kind = dataset.schema.target_kind
        if self.measure == "variance" and kind != "numeric":
            raise ValueError("variance reduction requires a numeric target")
        if self.measure in ("gain", "gainratio") and kind != "class":
            raise ValueError(f"measure {self.measure!r} requires a class target")


@dataclass
class NodeContext:
    """Pooled relevant examples of one forest node plus its active folds."""

    idx: np.ndarray
    folds: tuple[int, ...]
    depth: int
    #: per-fold prediction to fall back on when a fold has no example here
    fallback: dict[int, int | float] = field(default_factory=dict)


@dataclass
class GroupRefinement:
    """Outcome of refining one node, for one group of agreeing folds."""

    folds: tuple[int, ...]
    test: object | None = None
    leaves: dict[int, LeafInfo] | None = None
    #: per outcome: a child NodeContext, or a per-fold leaf dict when the
    #: outcome bucket came out empty
    children: list[object] | None = None


class _Prepared:
    """Per-node state shared by the depth-first and level-wise paths."""

    __slots__ = ("ctx", "vecs", "counts", "pure", "preds", "live", "tests", "stats")

    def __init__(self, ctx, vecs, counts, pure, preds, live, tests):
        self.ctx = ctx
        self.vecs = vecs
        self.counts = counts
        self.pure = pure
        self.preds = preds
        self.live = live
        self.tests = tests
        self.stats = None


def _prepare(
    ctx: NodeContext, dataset: Dataset, folds: FoldAssignment, config: InductionConfig
) -> _Prepared:
    kind = dataset.schema.target_kind
    parts = target_statistics_by_part(dataset, folds, ctx.idx)
    total = parts.sum(axis=0)
    vecs: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    pure: dict[int, bool] = {}
    preds: dict[int, int | float] = {}
    global_pred = target_prediction(total, kind)
    for i in ctx.folds:
        vec = total if i == 0 else total - parts[i - 1]
        vecs[i] = vec
        counts[i] = target_count(vec, kind)
        pure[i] = target_is_pure(vec, kind)
        if counts[i] > 0:
            preds[i] = target_prediction(vec, kind)
        else:
            preds[i] = ctx.fallback.get(i, global_pred)
    live = [i for i in ctx.folds if not pure[i] and counts[i] >= config.min_examples]
    tests = enumerate_tests(dataset, ctx.idx) if live else []
    return _Prepared(ctx, vecs, counts, pure, preds, live, tests)


def _verify_subtraction(prepared: _Prepared, dataset: Dataset, folds: FoldAssignment):
    ctx = prepared.ctx
    kind = dataset.schema.target_kind
    for i in prepared.live:
        slice_idx = ctx.idx if i == 0 else ctx.idx[folds.fold_of[ctx.idx] != i]
        direct = accumulate_statistics(dataset, slice_idx, prepared.tests)
        for t, (got, want) in enumerate(zip(prepared.stats, direct)):
            derived = got.sum(axis=0) if i == 0 else got.sum(axis=0) - got[i - 1]
            if kind == "class":
                ok = np.array_equal(derived, want)
            else:
                ok = np.allclose(derived, want, rtol=1e-9, atol=1e-9)
            if not ok:
                raise VerificationError(
                    f"fold {i}, test {t} at depth {ctx.depth}: subtraction-derived "
                    "statistics disagree with direct accumulation"
                )


def _finish(
    prepared: _Prepared,
    dataset: Dataset,
    folds: FoldAssignment,
    config: InductionConfig,
    counters: Counters,
) -> list[GroupRefinement]:
    ctx = prepared.ctx
    kind = dataset.schema.target_kind
    choices: dict[int, int | None] = {i: None for i in ctx.folds}
    if prepared.live and prepared.tests:
        if config.verify_stats:
            _verify_subtraction(prepared, dataset, folds)
        live = np.array(prepared.live)
        # quality per (training set, test): one vectorized call per test
        quality = np.empty((len(live), len(prepared.stats)))
        for t, per_part in enumerate(prepared.stats):
            derived = derive_training_arrays(per_part)
            quality[:, t] = quality_rows(derived[live], kind, config.measure)
        for pos, i in enumerate(prepared.live):
            row = quality[pos]
            best = int(np.argmax(row))
            choices[i] = best if row[best] > 0.0 else None

    out: list[GroupRefinement] = []
    for members, choice in group_folds_by_choice(choices):
        if choice is None:
            leaves = {i: _leaf_info(prepared, i, kind) for i in members}
            out.append(GroupRefinement(folds=members, leaves=leaves))
            continue
        test = prepared.tests[choice]
        union = ctx.idx
        if len(members) == 1 and members[0] != 0:
            # a lone fold keeps only its own training examples below here
            union = ctx.idx[folds.fold_of[ctx.idx] != members[0]]
        buckets = partition_examples(union, test, dataset, counters)
        children: list[object] = []
        child_fallback = {i: prepared.preds[i] for i in members}
        for bucket in buckets:
            if len(bucket) == 0:
                children.append(
                    {i: _empty_leaf(prepared.preds[i], dataset) for i in members}
                )
            else:
                children.append(
                    NodeContext(bucket, members, ctx.depth + 1, dict(child_fallback))
                )
        out.append(GroupRefinement(folds=members, test=test, children=children))
    return out


def _leaf_info(prepared: _Prepared, i: int, kind: str) -> LeafInfo:
    vec = prepared.vecs[i]
    if kind == "class":
        return LeafInfo(
            prediction=prepared.preds[i],
            count=prepared.counts[i],
            distribution=tuple(int(v) for v in vec),
        )
    return LeafInfo(prediction=prepared.preds[i], count=prepared.counts[i])


def _empty_leaf(prediction, dataset: Dataset) -> LeafInfo:
    if dataset.schema.target_kind == "class":
        return LeafInfo(
            prediction=prediction,
            count=0,
            distribution=tuple(0 for _ in range(dataset.schema.n_classes)),
        )
    return LeafInfo(prediction=prediction, count=0)


def refine_node_parallel(
    ctx: NodeContext,
    dataset: Dataset,
    folds: FoldAssignment,
    config: InductionConfig,
    counters: Counters | None = None,
) -> list[GroupRefinement]:
    """Refine one node for all its active folds in a single pass.

    Statistics are accumulated once per example over the pooled set, split by
    held-out part; each group of agreeing folds partitions its pooled union
    exactly once.
    """
    if counters is None:
        counters = Counters()
    prepared = _prepare(ctx, dataset, folds, config)
    if prepared.live and prepared.tests:
        prepared.stats = accumulate_fold_statistics(
            dataset, folds, ctx.idx, prepared.tests, counters
        )
    return _finish(prepared, dataset, folds, config, counters)


def _materialize(
    node: ForestNode,
    refinements: list[GroupRefinement],
) -> list[tuple[NodeContext, ForestNode]]:
    """Fill a forest node's groups; return child work items in visit order."""
    work: list[tuple[NodeContext, ForestNode]] = []
    for ref in refinements:
        if ref.test is None:
            node.groups.append(BifurcationGroup(folds=ref.folds, leaves=ref.leaves))
            continue
        children = []
        for child in ref.children:
            child_node = ForestNode(depth=node.depth + 1)
            if isinstance(child, NodeContext):
                work.append((child, child_node))
            else:
                child_node.groups.append(
                    BifurcationGroup(folds=ref.folds, leaves=child)
                )
                child_node.refined = False
            children.append(child_node)
        node.groups.append(
            BifurcationGroup(folds=ref.folds, test=ref.test, children=children)
        )
    return work


def _record_level(profile: dict[int, LevelProfile], depth: int, seconds: float, refs):
    prof = profile.setdefault(depth, LevelProfile())
    prof.seconds += seconds
    prof.nodes += 1
    prof.choice_group_counts.append(sum(1 for r in refs if r.test is not None))


def grow_forest_depth_first(
    dataset: Dataset, folds: FoldAssignment, config: InductionConfig
) -> Forest:
    """Recursive-style induction via an explicit worklist (deep trees safe)."""
    config.check_target(dataset)
    counters = Counters()
    t_start = time.perf_counter()
    root_ctx = NodeContext(np.arange(dataset.n_examples), tuple(range(folds.n + 1)), 1)
    root = ForestNode(depth=1)
    profile: dict[int, LevelProfile] = {}
    root_test_count = 0
    stack: list[tuple[NodeContext, ForestNode]] = [(root_ctx, root)]
    first = True
    while stack:
        ctx, node = stack.pop()
        t0 = time.perf_counter()
        prepared = _prepare(ctx, dataset, folds, config)
        if prepared.live and prepared.tests:
            prepared.stats = accumulate_fold_statistics(
                dataset, folds, ctx.idx, prepared.tests, counters
            )
        refs = _finish(prepared, dataset, folds, config, counters)
        _record_level(profile, ctx.depth, time.perf_counter() - t0, refs)
        if first:
            root_test_count = len(prepared.tests)
            first = False
        work = _materialize(node, refs)
        stack.extend(reversed(work))
    return Forest(
        root=root,
        n=folds.n,
        level_profile=profile,
        counters=counters,
        folds_signature=folds.signature,
        root_test_count=root_test_count,
        build_seconds=time.perf_counter() - t_start,
    )


def grow_forest_level_wise(
    dataset: Dataset, folds: FoldAssignment, config: InductionConfig
) -> Forest:
    """Frontier-by-frontier induction: one pass through the data per level.

    Each level's pass computes the frontier nodes' target distributions and
    candidate-test statistics; choices, grouping and partitioning are then
    resolved for the whole level.  The result is structurally identical to
    the depth-first forest.
    """
    config.check_target(dataset)
    counters = Counters()
    t_start = time.perf_counter()
    root_ctx = NodeContext(np.arange(dataset.n_examples), tuple(range(folds.n + 1)), 1)
    root = ForestNode(depth=1)
    profile: dict[int, LevelProfile] = {}
    root_test_count = 0
    frontier: list[tuple[NodeContext, ForestNode]] = [(root_ctx, root)]
    depth = 1
    while frontier:
        counters.data_passes += 1
        next_frontier: list[tuple[NodeContext, ForestNode]] = []
        for ctx, node in frontier:
            t0 = time.perf_counter()
            prepared = _prepare(ctx, dataset, folds, config)
            if prepared.live and prepared.tests:
                prepared.stats = accumulate_fold_statistics(
                    dataset, folds, ctx.idx, prepared.tests, counters
                )
            refs = _finish(prepared, dataset, folds, config, counters)
            _record_level(profile, depth, time.perf_counter() - t0, refs)
            if depth == 1:
                root_test_count = len(prepared.tests)
            next_frontier.extend(_materialize(node, refs))
        frontier = next_frontier
        depth += 1
    return Forest(
        root=root,
        n=folds.n,
        level_profile=profile,
        counters=counters,
        folds_signature=folds.signature,
        root_test_count=root_test_count,
        build_seconds=time.perf_counter() - t_start,
    )


def grow_forest(dataset: Dataset, folds: FoldAssignment, config: InductionConfig) -> Forest:
    if config.variant == LEVEL_WISE:
        return grow_forest_level_wise(dataset, folds, config)
    return grow_forest_depth_first(dataset, folds, config)


def grow_tree_serial(
    dataset: Dataset,
    view: np.ndarray,
    config: InductionConfig,
    counters: Counters | None = None,
    level_seconds: dict[int, float] | None = None,
) -> TreeNode:
    """Classic top-down induction of one tree over one training set.

    Uses the same candidate enumeration, quality measure, tie rule and stop
    criterion as the forest builders, so a forest restricted to one fold must
    reproduce this tree exactly (for integer class statistics).
    """
    config.check_target(dataset)
    if len(view) == 0:
        raise ValueError("training view must be non-empty")
    if counters is None:
        counters = Counters()
    kind = dataset.schema.target_kind
    root = TreeNode()
    global_pred = target_prediction(target_statistics(dataset, view), kind)
    stack: list[tuple[np.ndarray, int, object, TreeNode]] = [(view, 1, global_pred, root)]
    while stack:
        idx, depth, fallback, node = stack.pop()
        t0 = time.perf_counter()
        vec = target_statistics(dataset, idx)
        count = target_count(vec, kind)
        pred = target_prediction(vec, kind) if count > 0 else fallback
        leaf = LeafInfo(
            prediction=pred,
            count=count,
            distribution=tuple(int(v) for v in vec) if kind == "class" else None,
        )
        best_test = None
        if count >= config.min_examples and not target_is_pure(vec, kind):
            tests = enumerate_tests(dataset, idx)
            if tests:
                stats = accumulate_statistics(dataset, idx, tests, counters)
                row = np.array(
                    [quality_from_array(s, kind, config.measure) for s in stats]
                )
                best = int(np.argmax(row))
                if row[best] > 0.0:
                    best_test = tests[best]
        if best_test is None:
            node.leaf = leaf
        else:
            buckets = partition_examples(idx, best_test, dataset, counters)
            node.test = best_test
            children = []
            pending = []
            for bucket in buckets:
                child = TreeNode()
                if len(bucket) == 0:
                    child.leaf = LeafInfo(
                        prediction=pred,
                        count=0,
                        distribution=(
                            tuple(0 for _ in range(dataset.schema.n_classes))
                            if kind == "class"
                            else None
                        ),
                    )
                else:
                    pending.append((bucket, depth + 1, pred, child))
                children.append(child)
            node.children = tuple(children)
            stack.extend(reversed(pending))
        if level_seconds is not None:
            level_seconds[depth] = level_seconds.get(depth, 0.0) + (
                time.perf_counter() - t0
            )
    return root


@dataclass
class SerialCVResult:
    """All n+1 independently built trees plus instrumentation."""

    trees: list[TreeNode]  # index 0 = actual tree, 1..n = fold trees
    counters: Counters
    tree_seconds: list[float]
    level_seconds: dict[int, float]
    total_seconds: float


def run_serial_cross_validation(
    dataset: Dataset, folds: FoldAssignment, config: InductionConfig
) -> SerialCVResult:
    """Baseline: build the actual tree and every fold's tree one after another."""
    counters = Counters()
    trees: list[TreeNode] = []
    tree_seconds: list[float] = []
    level_seconds: dict[int, float] = {}
    t_start = time.perf_counter()
    for i in range(folds.n + 1):
        view = training_view(dataset, folds, i)
        t0 = time.perf_counter()
        trees.append(grow_tree_serial(dataset, view, config, counters, level_seconds))
        tree_seconds.append(time.perf_counter() - t0)
    return SerialCVResult(
        trees=trees,
        counters=counters,
        tree_seconds=tree_seconds,
        level_seconds=level_seconds,
        total_seconds=time.perf_counter() - t_start,
    )
