"""Decision-tree induction with cross-validation integrated into the build.

All n fold trees and the actual tree are grown together in one shared
"forest": split statistics are accumulated once per example and derived per
training set by subtraction, and folds that agree on a test share the subtree
below it.  A benchmark harness measures the resulting speedup against the
straightforward serial procedure.
"""

from .data import (
    AttributeSpec,
    Dataset,
    DataError,
    FoldAssignment,
    Schema,
    assign_folds,
    load_dataset,
    load_dataset_text,
    training_view,
)
from .splits import (
    Counters,
    StatisticsMatrix,
    Test,
    accumulate_fold_statistics,
    accumulate_statistics,
    best_choice_per_fold,
    compute_quality,
    derive_training_statistics,
    enumerate_tests,
    update_statistics,
)
from .forest import (
    BifurcationGroup,
    Forest,
    ForestNode,
    LeafInfo,
    TreeNode,
    extract_fold_tree,
    forest_metrics,
    forest_to_json,
    group_folds_by_choice,
    partition_examples,
    trees_equal,
    tree_to_json,
)
from .induction import (
    InductionConfig,
    NodeContext,
    VerificationError,
    grow_forest,
    grow_forest_depth_first,
    grow_forest_level_wise,
    grow_tree_serial,
    refine_node_parallel,
    run_serial_cross_validation,
)
from .evaluation import (
    EvaluationReport,
    cross_validation_estimate,
    predict,
    predict_indices,
)
from .bench import (
    CostModel,
    TimingReport,
    generate_synthetic,
    measure_timings,
    per_level_profile,
    random_classification_dataset,
    random_regression_dataset,
    run_equivalence_suite,
    speedup_bound,
)

__version__ = "0.1.0"
