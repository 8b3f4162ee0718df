import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvforest import DataError, assign_folds, load_dataset_text, training_view
from cvforest.data import FoldAssignment

from conftest import text_dataset


class TestLoading:
    def test_small_numeric_and_class_columns(self):
        ds = text_dataset(
            """
size,color,class
1.5,red,yes
2.0,blue,no
3.5,red,yes
"""
        )
        assert ds.n_examples == 3
        size, color = ds.schema.attributes
        assert (size.name, size.kind) == ("size", "numeric")
        assert (color.name, color.kind) == ("color", "discrete")
        assert color.domain == ("red", "blue")  # first-appearance order
        assert ds.schema.target_kind == "class"
        assert ds.schema.classes == ("yes", "no")
        assert ds.attribute_value(0, 0) == 1.5
        assert ds.attribute_value(1, 1) == "blue"
        assert ds.target_value(2) == "yes"

    def test_numeric_target_yields_regression_schema(self):
        ds = text_dataset("a,y\nx,1.0\nz,2.5\n", target="y")
        assert ds.schema.target_kind == "numeric"
        assert ds.schema.classes is None
        assert ds.target.dtype == np.float64

    def test_missing_cell_names_row_and_column(self):
        with pytest.raises(DataError, match=r"row 3.*'color'"):
            text_dataset("size,color,class\n1,red,yes\n2,,no\n")

    def test_ragged_row_rejected(self):
        with pytest.raises(DataError, match="row 3"):
            text_dataset("a,b,class\n1,2,yes\n1,no\n")

    def test_empty_file_and_headerless_file(self):
        with pytest.raises(DataError, match="no header"):
            load_dataset_text("", "class")
        with pytest.raises(DataError, match="no data rows"):
            load_dataset_text("a,b,class\n", "class")

    def test_unknown_target_column(self):
        with pytest.raises(DataError, match="'label'"):
            text_dataset("a,class\nx,yes\n", target="label")

    def test_all_numeric_column_forced_discrete(self):
        ds = text_dataset(
            "a,class\n1,yes\n2,no\n3,yes\n", force_kinds={"a": "discrete"}
        )
        spec = ds.schema.attributes[0]
        assert spec.kind == "discrete"
        assert spec.domain == ("1", "2", "3")

    def test_force_numeric_rejects_unparseable_value(self):
        with pytest.raises(DataError, match=r"'x' at row 3.*'a'"):
            text_dataset("a,class\n1,yes\nx,no\n", force_kinds={"a": "numeric"})

    def test_force_kind_for_unknown_column(self):
        with pytest.raises(DataError, match="'missing'"):
            text_dataset("a,class\n1,yes\n", force_kinds={"missing": "discrete"})

    def test_tab_delimiter(self):
        ds = text_dataset("a\tclass\nx\tyes\nz\tno\n", delimiter="\t")
        assert ds.n_examples == 2
        assert ds.schema.attributes[0].domain == ("x", "z")

    def test_example_order_preserved(self):
        ds = text_dataset("a,class\np,yes\nq,no\nr,yes\n")
        assert [ds.attribute_value(i, 0) for i in range(3)] == ["p", "q", "r"]

    def test_example_values_round_trip(self):
        ds = text_dataset("a,b,class\nx,1.5,yes\n", force_kinds={"a": "discrete"})
        assert ds.example_values(0) == {"a": "x", "b": 1.5}


class TestFoldAssignment:
    def _dataset(self, n):
        rows = "\n".join(f"v{i % 3},c{i % 2}" for i in range(n))
        return text_dataset("a,class\n" + rows)

    def test_sizes_balanced_within_one(self):
        ds = self._dataset(12)
        folds = assign_folds(ds, 3, seed=1)
        sizes = [len(folds.part(i)) for i in (1, 2, 3)]
        assert sizes == [4, 4, 4]
        ds = self._dataset(13)
        folds = assign_folds(ds, 3, seed=1)
        sizes = sorted(len(folds.part(i)) for i in (1, 2, 3))
        assert sizes == [4, 4, 5]

    def test_parts_partition_the_dataset(self):
        ds = self._dataset(17)
        folds = assign_folds(ds, 5, seed=7)
        all_idx = np.sort(np.concatenate([folds.part(i) for i in range(1, 6)]))
        assert np.array_equal(all_idx, np.arange(17))

    def test_training_view_complements_part(self):
        ds = self._dataset(12)
        folds = assign_folds(ds, 3, seed=0)
        for i in (1, 2, 3):
            view = training_view(ds, folds, i)
            assert len(view) == 8
            assert not set(view) & set(folds.part(i))
        assert np.array_equal(training_view(ds, folds, 0), np.arange(12))

    def test_each_example_in_exactly_n_minus_one_training_sets(self):
        ds = self._dataset(11)
        folds = assign_folds(ds, 4, seed=3)
        membership = np.zeros(11, dtype=int)
        for i in range(1, 5):
            membership[training_view(ds, folds, i)] += 1
        assert np.all(membership == 3)

    def test_leave_one_out(self):
        ds = self._dataset(6)
        folds = assign_folds(ds, 6, seed=0)
        assert all(len(folds.part(i)) == 1 for i in range(1, 7))

    def test_deterministic_per_seed(self):
        ds = self._dataset(30)
        a = assign_folds(ds, 5, seed=42)
        b = assign_folds(ds, 5, seed=42)
        c = assign_folds(ds, 5, seed=43)
        assert np.array_equal(a.fold_of, b.fold_of)
        assert a.signature == b.signature
        assert not np.array_equal(a.fold_of, c.fold_of)

    def test_fold_count_bounds(self):
        ds = self._dataset(5)
        with pytest.raises(ValueError):
            assign_folds(ds, 1, seed=0)
        with pytest.raises(ValueError):
            assign_folds(ds, 6, seed=0)

    def test_part_index_range(self):
        ds = self._dataset(6)
        folds = assign_folds(ds, 3, seed=0)
        with pytest.raises(ValueError):
            folds.part(0)
        with pytest.raises(ValueError):
            folds.part(4)
        with pytest.raises(ValueError):
            training_view(ds, folds, 4)

    def test_stratified_keeps_per_class_balance(self):
        rows = "\n".join(f"v{i % 3},{'pos' if i < 9 else 'neg'}" for i in range(18))
        ds = text_dataset("a,class\n" + rows)
        folds = assign_folds(ds, 3, seed=5, stratified=True)
        for i in (1, 2, 3):
            labels = ds.target[folds.part(i)]
            assert (labels == 0).sum() == 3
            assert (labels == 1).sum() == 3

    def test_stratified_requires_class_target(self):
        ds = text_dataset("a,y\nx,1\nz,2\nx,3\n", target="y")
        with pytest.raises(ValueError):
            assign_folds(ds, 2, seed=0, stratified=True)

    @settings(max_examples=25, deadline=None)
    @given(
        n_examples=st.integers(min_value=4, max_value=120),
        n=st.integers(min_value=2, max_value=10),
        seed=st.integers(min_value=0, max_value=10_000),
    )
    def test_assignment_invariants(self, n_examples, n, seed):
        if n > n_examples:
            n = 2
        ds = self._dataset(n_examples)
        folds = assign_folds(ds, n, seed=seed)
        assert folds.fold_of.min() >= 1 and folds.fold_of.max() <= n
        sizes = [len(folds.part(i)) for i in range(1, n + 1)]
        assert sum(sizes) == n_examples
        assert max(sizes) - min(sizes) <= 1


class TestSignature:
    def test_signature_reflects_assignment(self):
        a = FoldAssignment(2, np.array([1, 2, 1, 2]), seed=0, stratified=False)
        b = FoldAssignment(2, np.array([1, 2, 1, 2]), seed=9, stratified=False)
        c = FoldAssignment(2, np.array([2, 1, 1, 2]), seed=0, stratified=False)
        assert a.signature == b.signature  # same mapping, seed irrelevant
        assert a.signature != c.signature
