"""The shared multi-fold decision structure and single-tree extraction.

A forest node is a bifurcation point holding one or more groups; folds that
selected the same choice (same test, or all stopping) share a group and all
the work below it.  Restricting the forest to one fold yields an ordinary
decision tree.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, Schema
from .splits import Counters, Test


@dataclass(frozen=True)
class LeafInfo:
    """Per-fold leaf payload.

    Classification: ``prediction`` is a class index and ``distribution`` the
    class counts of the fold's training examples at the leaf.  Regression:
    ``prediction`` is the mean and ``distribution`` is ``None``.
    """

    prediction: int | float
    count: int
    distribution: tuple[int, ...] | None = None


@dataclass
class BifurcationGroup:
    """Folds sharing one choice: either a test with children, or leaves."""

    folds: tuple[int, ...]
    test: Test | None = None
    children: list["ForestNode"] | None = None
    leaves: dict[int, LeafInfo] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.test is None


@dataclass
class ForestNode:
    depth: int
    groups: list[BifurcationGroup] = field(default_factory=list)
    #: False for leaves materialized from empty partition buckets, which are
    #: decided at the parent and never refined themselves.
    refined: bool = True

    @property
    def test_group_count(self) -> int:
        return sum(1 for g in self.groups if not g.is_leaf)

    @property
    def is_bifurcation(self) -> bool:
        return len(self.groups) > 1


@dataclass
class LevelProfile:
    seconds: float = 0.0
    nodes: int = 0
    choice_group_counts: list[int] = field(default_factory=list)

    @property
    def f(self) -> float | None:
        counts = [c for c in self.choice_group_counts if c >= 1]
        return float(np.mean(counts)) if counts else None


@dataclass
class Forest:
    root: ForestNode
    n: int
    level_profile: dict[int, LevelProfile]
    counters: Counters
    folds_signature: tuple
    root_test_count: int
    build_seconds: float = 0.0


@dataclass
class TreeNode:
    """Ordinary single-fold decision tree node."""

    test: Test | None = None
    children: tuple["TreeNode", ...] = ()
    leaf: LeafInfo | None = None

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def internal_count(self) -> int:
        if self.test is None:
            return 0
        return 1 + sum(c.internal_count() for c in self.children)

    def max_depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.max_depth() for c in self.children)


def trees_equal(a: TreeNode, b: TreeNode, compare_distribution: bool = False) -> bool:
    """Structural equality: same tests, same topology, same leaf prediction."""
    if (a.test is None) != (b.test is None):
        return False
    if a.test is None:
        if a.leaf.prediction != b.leaf.prediction:
            return False
        if compare_distribution and (
            a.leaf.count != b.leaf.count or a.leaf.distribution != b.leaf.distribution
        ):
            return False
        return True
    if a.test != b.test or len(a.children) != len(b.children):
        return False
    return all(
        trees_equal(ca, cb, compare_distribution) for ca, cb in zip(a.children, b.children)
    )


def group_folds_by_choice(choices: dict[int, int | None]) -> list[tuple[tuple[int, ...], int | None]]:
    """Group folds with an identical choice; order by smallest member fold."""
    if not choices:
        raise ValueError("at least one fold required")
    buckets: dict[object, list[int]] = {}
    for fold in sorted(choices):
        buckets.setdefault(choices[fold], []).append(fold)
    groups = [(tuple(members), choice) for choice, members in buckets.items()]
    groups.sort(key=lambda g: g[0][0])
    return groups


def partition_examples(
    examples: np.ndarray,
    test: Test,
    dataset: Dataset,
    counters: Counters | None = None,
) -> list[np.ndarray]:
    """Split an ordered example-index set into per-outcome buckets, once."""
    t0 = time.perf_counter()
    outcomes = test.outcomes(dataset, examples)
    buckets = [examples[outcomes == j] for j in range(test.arity)]
    if counters is not None:
        counters.partitions += len(examples)
        counters.partition_seconds += time.perf_counter() - t0
    return buckets


def extract_fold_tree(forest: Forest, i: int) -> TreeNode:
    """Single fold's tree: follow the group containing ``i`` at every node."""
    if not 0 <= i <= forest.n:
        raise ValueError(f"fold index {i} out of range 0..{forest.n}")

    def walk(node: ForestNode) -> TreeNode:
        for g in node.groups:
            if i in g.folds:
                if g.is_leaf:
                    return TreeNode(leaf=g.leaves[i])
                return TreeNode(test=g.test, children=tuple(walk(c) for c in g.children))
        raise ValueError(f"fold {i} missing from a bifurcation point")

    return walk(forest.root)


@dataclass
class ForestMetrics:
    test_node_count: int
    leaf_entry_count: int
    bifurcation_count: int
    max_depth: int
    f_per_level: dict[int, float]


def forest_metrics(forest: Forest) -> ForestMetrics:
    """Walk the structure and report sharing statistics.

    ``f_per_level`` averages, over each level's refined nodes that selected at
    least one test, the number of distinct test choices there; 1 means full
    sharing, n+1 total divergence.
    """
    test_nodes = 0
    leaf_entries = 0
    bifurcations = 0
    max_depth = 0
    per_level: dict[int, list[int]] = {}
    stack = [forest.root]
    while stack:
        node = stack.pop()
        if node.refined:
            max_depth = max(max_depth, node.depth)
        if node.is_bifurcation:
            bifurcations += 1
        tg = node.test_group_count
        if node.refined and tg >= 1:
            per_level.setdefault(node.depth, []).append(tg)
        for g in node.groups:
            if g.is_leaf:
                leaf_entries += len(g.leaves)
            else:
                test_nodes += 1
                stack.extend(g.children)
    f_per_level = {d: float(np.mean(v)) for d, v in sorted(per_level.items())}
    return ForestMetrics(
        test_node_count=test_nodes,
        leaf_entry_count=leaf_entries,
        bifurcation_count=bifurcations,
        max_depth=max_depth,
        f_per_level=f_per_level,
    )


def _leaf_dict(info: LeafInfo, schema: Schema | None) -> dict:
    d: dict = {}
    if schema is not None and schema.target_kind == "class":
        d["prediction"] = schema.classes[int(info.prediction)]
    else:
        d["prediction"] = info.prediction
    d["count"] = info.count
    if info.distribution is not None:
        d["distribution"] = list(info.distribution)
    return d


def _group_dict(group: BifurcationGroup, schema: Schema | None) -> dict:
    if group.is_leaf:
        return {
            "type": "leaf",
            "folds": list(group.folds),
            "leaves": {str(i): _leaf_dict(group.leaves[i], schema) for i in group.folds},
        }
    d: dict = {
        "type": "test",
        "folds": list(group.folds),
        "attribute": group.test.attr_name,
    }
    if group.test.threshold is not None:
        d["threshold"] = group.test.threshold
    d["children"] = [_node_dict(c, schema) for c in group.children]
    return d


def _node_dict(node: ForestNode, schema: Schema | None) -> dict:
    if len(node.groups) == 1:
        return _group_dict(node.groups[0], schema)
    return {
        "type": "bifurcation",
        "groups": [_group_dict(g, schema) for g in node.groups],
    }


def forest_to_dict(forest: Forest, schema: Schema | None = None) -> dict:
    return {"folds": forest.n, "root": _node_dict(forest.root, schema)}


def forest_to_json(forest: Forest, schema: Schema | None = None) -> str:
    """Deterministic serialization: stable field and group order."""
    return json.dumps(forest_to_dict(forest, schema), indent=2)


def tree_to_dict(tree: TreeNode, schema: Schema | None = None) -> dict:
    if tree.test is None:
        d = {"type": "leaf"}
        d.update(_leaf_dict(tree.leaf, schema))
        return d
    d = {"type": "test", "attribute": tree.test.attr_name}
    if tree.test.threshold is not None:
        d["threshold"] = tree.test.threshold
    d["children"] = [tree_to_dict(c, schema) for c in tree.children]
    return d


def tree_to_json(tree: TreeNode, schema: Schema | None = None) -> str:
    return json.dumps(tree_to_dict(tree, schema), indent=2)
