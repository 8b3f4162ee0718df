import numpy as np
import pytest

from cvforest import FoldAssignment, load_dataset_text


def text_dataset(text, target="class", delimiter=",", force_kinds=None):
    return load_dataset_text(text.strip() + "\n", target, delimiter, force_kinds)


def manual_folds(n, assignments, seed=-1):
    """FoldAssignment with a hand-picked example-to-fold map."""
    return FoldAssignment(
        n=n, fold_of=np.asarray(assignments, dtype=np.int64), seed=seed, stratified=False
    )


@pytest.fixture
def tiny_classification():
    # class follows attribute A exactly
    return text_dataset(
        """
A,B,class
a,1,pos
a,2,pos
b,1,neg
b,2,neg
a,1,pos
b,2,neg
a,2,pos
b,1,neg
""",
        force_kinds={"B": "discrete"},
    )
