import json

import numpy as np
import pytest

from cvforest import (
    Counters,
    InductionConfig,
    LeafInfo,
    TreeNode,
    assign_folds,
    extract_fold_tree,
    forest_to_json,
    grow_forest,
    group_folds_by_choice,
    partition_examples,
    trees_equal,
    tree_to_json,
)
from cvforest.bench import generate_synthetic, random_classification_dataset
from cvforest.forest import forest_metrics, forest_to_dict
from cvforest.splits import Test as SplitTest

from conftest import text_dataset


class TestGrouping:
    def test_unanimous_choice_single_group(self):
        groups = group_folds_by_choice({0: 4, 1: 4, 2: 4})
        assert groups == [((0, 1, 2), 4)]

    def test_mixed_choices_grouped_and_ordered(self):
        # folds 0 and 1 pick test 7, fold 2 picks test 2, fold 3 stops
        groups = group_folds_by_choice({0: 7, 1: 7, 2: 2, 3: None})
        assert groups == [((0, 1), 7), ((2,), 2), ((3,), None)]

    def test_all_distinct_choices(self):
        groups = group_folds_by_choice({i: i for i in range(4)})
        assert len(groups) == 4
        assert [g[0] for g in groups] == [(0,), (1,), (2,), (3,)]

    def test_order_by_smallest_member(self):
        groups = group_folds_by_choice({0: 5, 1: 3, 2: 5, 3: 3})
        assert groups == [((0, 2), 5), ((1, 3), 3)]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            group_folds_by_choice({})


class TestPartitioning:
    def test_buckets_preserve_order_and_partition(self):
        ds = text_dataset(
            "a,class\n" + "\n".join(f"{'x' if i % 3 else 'y'},c{i % 2}" for i in range(12))
        )
        test = SplitTest(0, "a", "discrete", arity=2)
        counters = Counters()
        idx = np.arange(12)
        buckets = partition_examples(idx, test, ds, counters)
        assert len(buckets) == 2
        merged = np.sort(np.concatenate(buckets))
        assert np.array_equal(merged, idx)
        for b in buckets:
            assert np.array_equal(b, np.sort(b))  # original order kept
        assert counters.partitions == 12
        assert counters.partition_seconds > 0

    def test_empty_outcome_bucket(self):
        ds = text_dataset("a,class\nx,c0\nx,c1\ny,c0\n")
        test = SplitTest(0, "a", "discrete", arity=2)
        buckets = partition_examples(np.array([0, 1]), test, ds)
        assert buckets[0].tolist() == [0, 1]
        assert buckets[1].tolist() == []


def _small_forest(seed=3, n=3):
    ds = random_classification_dataset(seed=seed, n_examples=60, n_attributes=4)
    folds = assign_folds(ds, n, seed=seed)
    config = InductionConfig(n_folds=n, seed=seed)
    return ds, folds, grow_forest(ds, folds, config)


class TestExtraction:
    def test_every_fold_yields_a_tree(self):
        ds, folds, forest = _small_forest()
        for i in range(folds.n + 1):
            tree = extract_fold_tree(forest, i)
            assert isinstance(tree, TreeNode)
            assert tree.node_count() >= 1

    def test_fold_index_out_of_range(self):
        _, _, forest = _small_forest()
        with pytest.raises(ValueError):
            extract_fold_tree(forest, forest.n + 1)
        with pytest.raises(ValueError):
            extract_fold_tree(forest, -1)

    def test_stable_data_trees_share_all_structure(self):
        ds = generate_synthetic("stable", 600, 6, seed=1)
        folds = assign_folds(ds, 5, seed=1)
        forest = grow_forest(ds, folds, InductionConfig(n_folds=5, seed=1))
        metrics = forest_metrics(forest)
        assert metrics.bifurcation_count == 0
        assert all(f == 1.0 for f in metrics.f_per_level.values())
        trees = [extract_fold_tree(forest, i) for i in range(6)]
        for t in trees[1:]:
            # same tests and topology everywhere; leaf counts differ per fold
            assert t.internal_count() == trees[0].internal_count()
            assert t.max_depth() == trees[0].max_depth()


class TestMetrics:
    def test_memory_bound_relative_to_actual_tree(self):
        ds, folds, forest = _small_forest(seed=9, n=5)
        metrics = forest_metrics(forest)
        actual = extract_fold_tree(forest, 0)
        assert metrics.test_node_count <= (folds.n + 1) * actual.node_count()

    def test_leaf_entries_cover_all_folds(self):
        ds, folds, forest = _small_forest(seed=4, n=3)
        metrics = forest_metrics(forest)
        # every fold path ends in at least one leaf entry
        assert metrics.leaf_entry_count >= folds.n + 1
        assert metrics.max_depth >= 1


class TestTreesEqual:
    def test_leaf_prediction_compared(self):
        a = TreeNode(leaf=LeafInfo(0, 3, (3, 0)))
        b = TreeNode(leaf=LeafInfo(0, 2, (2, 0)))
        c = TreeNode(leaf=LeafInfo(1, 3, (0, 3)))
        assert trees_equal(a, b)
        assert not trees_equal(a, b, compare_distribution=True)
        assert not trees_equal(a, c)

    def test_topology_and_test_compared(self):
        t = SplitTest(0, "a", "discrete", 2)
        u = SplitTest(1, "b", "discrete", 2)
        leaf = TreeNode(leaf=LeafInfo(0, 1, (1, 0)))
        a = TreeNode(test=t, children=(leaf, leaf))
        b = TreeNode(test=t, children=(leaf, leaf))
        c = TreeNode(test=u, children=(leaf, leaf))
        assert trees_equal(a, b, compare_distribution=True)
        assert not trees_equal(a, c)
        assert not trees_equal(a, leaf)


class TestSerialization:
    def test_forest_json_is_deterministic(self):
        _, _, f1 = _small_forest(seed=6)
        _, _, f2 = _small_forest(seed=6)
        assert forest_to_json(f1) == forest_to_json(f2)

    def test_bifurcation_nodes_marked(self):
        ds = generate_synthetic("unstable", 200, 5, seed=2)
        folds = assign_folds(ds, 5, seed=2)
        forest = grow_forest(ds, folds, InductionConfig(n_folds=5, seed=2))
        d = forest_to_dict(forest, ds.schema)
        text = json.dumps(d)
        assert '"bifurcation"' in text
        assert d["folds"] == 5

    def test_class_labels_decoded_with_schema(self):
        ds, folds, forest = _small_forest(seed=8)
        decoded = forest_to_json(forest, ds.schema)
        assert '"prediction": "c0"' in decoded or '"prediction": "c1"' in decoded

    def test_tree_json_roundtrips_structure(self):
        ds, folds, forest = _small_forest(seed=2)
        tree = extract_fold_tree(forest, 0)
        d = json.loads(tree_to_json(tree, ds.schema))
        assert d["type"] in ("leaf", "test")
        if d["type"] == "test":
            assert len(d["children"]) >= 2
