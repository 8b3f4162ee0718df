"""Prediction with single trees and cross-validation estimates from a forest."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import DISCRETE, Dataset, FoldAssignment, Schema
from .forest import Forest, TreeNode, extract_fold_tree


def predict(tree: TreeNode, schema: Schema, values: Mapping[str, object]):
    """Predict one raw example given as a mapping of attribute name to value.

    Returns the leaf's majority class label (classification) or mean
    (regression).  Values that do not conform to the schema are rejected.
    """
    node = tree
    while node.test is not None:
        spec = schema.attributes[node.test.attr_index]
        if spec.name not in values:
            raise ValueError(f"example is missing attribute {spec.name!r}")
        raw = values[spec.name]
        if spec.kind == DISCRETE:
            if raw not in spec.domain:
                raise ValueError(
                    f"value {raw!r} not in the domain of attribute {spec.name!r}"
                )
            outcome = spec.domain.index(raw)
        else:
            try:
                outcome = node.test.outcome_single(float(raw))
            except (TypeError, ValueError):
                raise ValueError(
                    f"value {raw!r} is not numeric for attribute {spec.name!r}"
                ) from None
        node = node.children[outcome]
    if schema.target_kind == "class":
        return schema.classes[int(node.leaf.prediction)]
    return float(node.leaf.prediction)


def predict_indices(tree: TreeNode, dataset: Dataset, idx: np.ndarray) -> np.ndarray:
    """Vectorized predictions (encoded) for a set of dataset rows."""
    kind = dataset.schema.target_kind
    out = np.empty(len(idx), dtype=np.int64 if kind == "class" else np.float64)
    # iterative to survive deep trees
    stack = [(tree, np.arange(len(idx)))]
    while stack:
        node, rows = stack.pop()
        if len(rows) == 0:
            continue
        if node.test is None:
            out[rows] = node.leaf.prediction
            continue
        outcomes = node.test.outcomes(dataset, idx[rows])
        for j, child in enumerate(node.children):
            stack.append((child, rows[outcomes == j]))
    return out


@dataclass
class FoldEvaluation:
    fold: int
    size: int
    score: float  # accuracy (classification) or mean squared error (regression)
    confusion: np.ndarray | None = None  # rows: true class, cols: predicted


@dataclass
class EvaluationReport:
    task: str  # "class" | "numeric"
    metric: str  # "accuracy" | "mse"
    folds: list[FoldEvaluation]
    aggregate: float

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "metric": self.metric,
            "aggregate": self.aggregate,
            "folds": [
                {
                    "fold": f.fold,
                    "size": f.size,
                    self.metric: f.score,
                    **(
                        {"confusion": f.confusion.tolist()}
                        if f.confusion is not None
                        else {}
                    ),
                }
                for f in self.folds
            ],
        }

    def to_csv_rows(self) -> list[list]:
        rows = [["fold", "size", self.metric]]
        for f in self.folds:
            rows.append([f.fold, f.size, f.score])
        rows.append(["aggregate", sum(f.size for f in self.folds), self.aggregate])
        return rows


def cross_validation_estimate(
    forest: Forest, dataset: Dataset, folds: FoldAssignment
) -> EvaluationReport:
    """Evaluate each fold's tree on exactly its held-out part.

    The aggregate is the example-weighted mean: total correct over N for
    classification, total squared error over N for regression.
    """
    if forest.folds_signature != folds.signature:
        raise ValueError("forest was built with a different fold assignment")
    kind = dataset.schema.target_kind
    reports: list[FoldEvaluation] = []
    agg_num = 0.0
    for i in range(1, folds.n + 1):
        tree = extract_fold_tree(forest, i)
        d_idx = folds.part(i)
        preds = predict_indices(tree, dataset, d_idx)
        truth = dataset.target[d_idx]
        if kind == "class":
            correct = int((preds == truth).sum())
            C = dataset.schema.n_classes
            confusion = np.zeros((C, C), dtype=np.int64)
            np.add.at(confusion, (truth, preds), 1)
            reports.append(
                FoldEvaluation(i, len(d_idx), correct / len(d_idx), confusion)
            )
            agg_num += correct
        else:
            sse = float(((preds - truth) ** 2).sum())
            reports.append(FoldEvaluation(i, len(d_idx), sse / len(d_idx)))
            agg_num += sse
    aggregate = agg_num / dataset.n_examples
    return EvaluationReport(
        task=kind,
        metric="accuracy" if kind == "class" else "mse",
        folds=reports,
        aggregate=aggregate,
    )
