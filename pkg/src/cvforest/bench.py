"""Benchmark harness: timings, derived metrics, bounds and synthetic data.

Measures the actual-tree build (T_a), the serial cross-validation run (T_s)
and the integrated forest build (T_p) under identical configuration, and
derives the speedup S = T_s/T_p and the overheads
O_s = 100*(T_s/T_a - 1)%, O_p = 100*(T_p/T_a - 1)%.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import AttributeSpec, Dataset, FoldAssignment, Schema, assign_folds, training_view
from .forest import extract_fold_tree, forest_metrics, trees_equal
from .induction import (
    InductionConfig,
    grow_forest,
    grow_tree_serial,
    run_serial_cross_validation,
)
from .splits import Counters, accumulate_statistics, enumerate_tests

# Below this wall-clock reading (seconds) a single measurement is considered
# too close to timer resolution; repeats are escalated.
_MIN_RELIABLE_SECONDS = 1e-4
_MAX_REPEATS = 25


def speedup(t_s: float, t_p: float) -> float:
    return t_s / t_p


def overhead_percent(t: float, t_a: float) -> float:
    return 100.0 * (t / t_a - 1.0)


def speedup_bound(n: int, a: int, t_e: float, t_p: float) -> tuple[float, float]:
    """(worst-case, best-case) speedup bounds of the integrated build.

    Worst case (every fold selects a different test): min(n, 1 + a*t_e/t_p).
    Best case (full agreement): n.
    """
    if n < 2:
        raise ValueError("fold count must be at least 2")
    if a <= 0 or t_e <= 0 or t_p <= 0:
        raise ValueError("a, t_e and t_p must be positive")
    return (min(float(n), 1.0 + a * t_e / t_p), float(n))


@dataclass
class CostModel:
    """Measured per-operation costs backing the speedup bound."""

    t_e: float  # mean seconds per example-test statistics update
    t_p: float  # mean seconds per partition operation
    a: int  # candidate-test count at the root
    n: int


@dataclass
class LevelRow:
    level: int
    t_r_parallel: float | None
    t_r_serial: float | None
    f: float | None


@dataclass
class TimingReport:
    n: int
    n_examples: int
    a: int
    repeats: int
    t_a: float | None = None
    t_s: float | None = None
    t_p: float | None = None
    parallel_counters: dict = field(default_factory=dict)
    serial_counters: dict = field(default_factory=dict)
    levels: list[LevelRow] = field(default_factory=list)
    cost_model: CostModel | None = None
    bound_worst: float | None = None
    bound_best: float | None = None
    analytic_speedup: float | None = None

    @property
    def s(self) -> float | None:
        if self.t_s is None or self.t_p is None:
            return None
        return speedup(self.t_s, self.t_p)

    @property
    def o_s(self) -> float | None:
        if self.t_s is None or self.t_a is None:
            return None
        return overhead_percent(self.t_s, self.t_a)

    @property
    def o_p(self) -> float | None:
        if self.t_p is None or self.t_a is None:
            return None
        return overhead_percent(self.t_p, self.t_a)

    @property
    def slack_factor(self) -> float | None:
        """Ratio of the wall-clock speedup to the counter-based one."""
        if self.s is None or not self.analytic_speedup:
            return None
        return self.s / self.analytic_speedup

    def to_dict(self) -> dict:
        return {
            "environment": {
                "folds": self.n,
                "examples": self.n_examples,
                "tests_at_root": self.a,
                "repeats": self.repeats,
            },
            "timings": {"T_a": self.t_a, "T_s": self.t_s, "T_p": self.t_p},
            "derived": {
                "S": self.s,
                "O_s_percent": self.o_s,
                "O_p_percent": self.o_p,
                "analytic_speedup": self.analytic_speedup,
                "slack_factor": self.slack_factor,
            },
            "bounds": {"worst": self.bound_worst, "best": self.bound_best},
            "cost_model": (
                {
                    "t_e": self.cost_model.t_e,
                    "t_p": self.cost_model.t_p,
                    "a": self.cost_model.a,
                    "n": self.cost_model.n,
                }
                if self.cost_model
                else None
            ),
            "counters": {
                "parallel": self.parallel_counters,
                "serial": self.serial_counters,
            },
            "levels": [
                {
                    "level": r.level,
                    "t_r_parallel": r.t_r_parallel,
                    "t_r_serial": r.t_r_serial,
                    "f": r.f,
                }
                for r in self.levels
            ],
        }

    def summary_rows(self) -> list[list]:
        rows = [["metric", "value"]]
        rows.append(["folds", self.n])
        rows.append(["examples", self.n_examples])
        rows.append(["tests_at_root", self.a])
        rows.append(["repeats", self.repeats])
        for name, value in (
            ("T_a", self.t_a),
            ("T_s", self.t_s),
            ("T_p", self.t_p),
            ("S", self.s),
            ("O_s_percent", self.o_s),
            ("O_p_percent", self.o_p),
            ("analytic_speedup", self.analytic_speedup),
            ("slack_factor", self.slack_factor),
            ("bound_worst", self.bound_worst),
            ("bound_best", self.bound_best),
        ):
            if value is not None:
                rows.append([name, value])
        for key, value in self.parallel_counters.items():
            rows.append([f"parallel_{key}", value])
        for key, value in self.serial_counters.items():
            rows.append([f"serial_{key}", value])
        return rows

    def level_rows(self) -> list[list]:
        rows = [["level", "t_r_parallel", "t_r_serial", "f"]]
        for r in self.levels:
            rows.append([r.level, r.t_r_parallel, r.t_r_serial, r.f])
        return rows


def per_level_profile(
    parallel_levels: dict | None, serial_levels: dict | None
) -> list[LevelRow]:
    """Merge per-level refinement times and sharing factors into one table."""
    keys = set()
    if parallel_levels:
        keys |= set(parallel_levels)
    if serial_levels:
        keys |= set(serial_levels)
    rows = []
    for level in sorted(keys):
        prof = parallel_levels.get(level) if parallel_levels else None
        rows.append(
            LevelRow(
                level=level,
                t_r_parallel=prof.seconds if prof else None,
                t_r_serial=serial_levels.get(level) if serial_levels else None,
                f=prof.f if prof else None,
            )
        )
    return rows


def _median(values: list[float]) -> float:
    return float(np.median(values))


def measure_timings(
    dataset: Dataset,
    config: InductionConfig,
    repeats: int = 3,
    mode: str = "both",
) -> TimingReport:
    """Time the serial and integrated procedures on one dataset.

    Runs each procedure ``repeats`` times on the same fold assignment and
    reports the median; counters and per-level profiles come from the final
    run of each procedure.  Too-small readings trigger a warning and repeat
    escalation.
    """
    if mode not in ("serial", "parallel", "both"):
        raise ValueError(f"unknown mode {mode!r}")
    folds = assign_folds(dataset, config.n_folds, config.seed, config.stratified)

    a_times: list[float] = []
    s_times: list[float] = []
    p_times: list[float] = []
    serial_result = None
    forest = None
    actual_counters = None

    done = 0
    target_repeats = max(1, repeats)
    while done < target_repeats:
        t0 = time.perf_counter()
        actual_counters = Counters()
        grow_tree_serial(dataset, training_view(dataset, folds, 0), config, actual_counters)
        a_times.append(time.perf_counter() - t0)
        if mode in ("serial", "both"):
            serial_result = run_serial_cross_validation(dataset, folds, config)
            s_times.append(serial_result.total_seconds)
        if mode in ("parallel", "both"):
            t0 = time.perf_counter()
            forest = grow_forest(dataset, folds, config)
            p_times.append(time.perf_counter() - t0)
        done += 1
        smallest = min(a_times + s_times + p_times)
        if smallest < _MIN_RELIABLE_SECONDS and target_repeats < _MAX_REPEATS:
            escalated = min(_MAX_REPEATS, target_repeats * 2)
            if escalated != target_repeats:
                warnings.warn(
                    "timings close to timer resolution; escalating repeats to "
                    f"{escalated}",
                    RuntimeWarning,
                    stacklevel=2,
                )
                target_repeats = escalated

    report = TimingReport(
        n=folds.n,
        n_examples=dataset.n_examples,
        a=forest.root_test_count if forest else _root_test_count(dataset),
        repeats=done,
        t_a=_median(a_times),
    )
    if s_times:
        report.t_s = _median(s_times)
        report.serial_counters = serial_result.counters.as_dict()
    if p_times:
        report.t_p = _median(p_times)
        report.parallel_counters = forest.counters.as_dict()
        c = forest.counters
        if c.evaluations > 0 and c.partitions > 0:
            model = CostModel(
                t_e=c.stats_seconds / c.evaluations,
                t_p=c.partition_seconds / c.partitions,
                a=forest.root_test_count,
                n=folds.n,
            )
            report.cost_model = model
            if model.t_e > 0 and model.t_p > 0 and model.a > 0:
                report.bound_worst, report.bound_best = speedup_bound(
                    folds.n, model.a, model.t_e, model.t_p
                )
    if serial_result is not None and forest is not None:
        if forest.counters.evaluations > 0:
            report.analytic_speedup = (
                serial_result.counters.evaluations / forest.counters.evaluations
            )
    report.levels = per_level_profile(
        forest.level_profile if forest else None,
        serial_result.level_seconds if serial_result else None,
    )
    return report


def _root_test_count(dataset: Dataset) -> int:
    return len(enumerate_tests(dataset, np.arange(dataset.n_examples)))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

STABLE = "stable"
UNSTABLE = "unstable"
MIXED = "mixed"
REGIMES = (STABLE, UNSTABLE, MIXED)


def generate_synthetic(regime: str, n_examples: int, a: int, seed: int) -> Dataset:
    """Seeded synthetic classification data in three qualitative regimes.

    ``stable``: the class is a deterministic shallow function of the first one
    or two attributes, with large quality gaps, so every fold selects the same
    tests.  ``unstable``: class labels are uniformly random, so folds disagree
    near-everywhere.  ``mixed``: a deterministic top split with random labels
    below it.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if n_examples < 1 or a < 1:
        raise ValueError("need at least one example and one attribute")
    rng = np.random.default_rng(seed)
    columns: list[np.ndarray] = []
    attributes: list[AttributeSpec] = []

    def discrete(name: str, width: int, values: np.ndarray):
        attributes.append(
            AttributeSpec(name, "discrete", tuple(f"v{j}" for j in range(width)))
        )
        columns.append(values.astype(np.int64))

    if regime == STABLE:
        informative = min(2, a)
        a0 = rng.integers(0, 3, size=n_examples)
        discrete("a0", 3, a0)
        if informative == 2:
            a1 = rng.integers(0, 2, size=n_examples)
            discrete("a1", 2, a1)
            # class: decided by a0 alone except in its last branch, where a1
            # takes over; keeps the tree depth 2 and the quality gaps wide
            target = np.where(a0 < 2, a0, 2 + a1)
            classes = ("c0", "c1", "c2", "c3")
        else:
            target = a0
            classes = ("c0", "c1", "c2")
        for k in range(informative, a):
            discrete(f"a{k}", 4, rng.integers(0, 4, size=n_examples))
    elif regime == UNSTABLE:
        for k in range(a):
            discrete(f"a{k}", 3, rng.integers(0, 3, size=n_examples))
        target = rng.integers(0, 2, size=n_examples)
        classes = ("c0", "c1")
    else:  # mixed
        a0 = rng.integers(0, 2, size=n_examples)
        discrete("a0", 2, a0)
        for k in range(1, a):
            discrete(f"a{k}", 3, rng.integers(0, 3, size=n_examples))
        target = np.where(a0 == 0, 0, 1 + rng.integers(0, 2, size=n_examples))
        classes = ("c0", "c1", "c2")

    schema = Schema(tuple(attributes), "class", "class", tuple(classes))
    return Dataset(schema, columns, target.astype(np.int64))


def random_classification_dataset(
    seed: int,
    n_examples: int | None = None,
    n_attributes: int | None = None,
) -> Dataset:
    """Small random discrete-attribute classification dataset for oracles.

    The label follows one attribute's value with seed-dependent noise, so the
    induced trees have real structure but folds still disagree often enough to
    exercise bifurcation.
    """
    rng = np.random.default_rng(seed)
    N = int(n_examples if n_examples is not None else rng.integers(20, 201))
    A = int(n_attributes if n_attributes is not None else rng.integers(2, 9))
    n_classes = int(rng.integers(2, 4))
    noise = rng.choice([0.1, 0.3, 0.5])
    columns = []
    attributes = []
    for k in range(A):
        width = int(rng.integers(2, 5))
        attributes.append(
            AttributeSpec(f"a{k}", "discrete", tuple(f"v{j}" for j in range(width)))
        )
        columns.append(rng.integers(0, width, size=N).astype(np.int64))
    base = columns[0] % n_classes
    flip = rng.random(N) < noise
    target = np.where(flip, rng.integers(0, n_classes, size=N), base)
    schema = Schema(
        tuple(attributes), "class", "class", tuple(f"c{j}" for j in range(n_classes))
    )
    return Dataset(schema, columns, target.astype(np.int64))


def random_regression_dataset(
    seed: int,
    n_examples: int | None = None,
    n_attributes: int | None = None,
) -> Dataset:
    """Small random dataset with a numeric target and mixed attribute kinds."""
    rng = np.random.default_rng(seed)
    N = int(n_examples if n_examples is not None else rng.integers(20, 201))
    A = int(n_attributes if n_attributes is not None else rng.integers(2, 7))
    columns = []
    attributes = []
    signal = np.zeros(N)
    for k in range(A):
        if rng.random() < 0.5:
            width = int(rng.integers(2, 5))
            attributes.append(
                AttributeSpec(f"a{k}", "discrete", tuple(f"v{j}" for j in range(width)))
            )
            col = rng.integers(0, width, size=N).astype(np.int64)
            columns.append(col)
            signal = signal + col
        else:
            attributes.append(AttributeSpec(f"a{k}", "numeric"))
            col = np.round(rng.normal(size=N) * 10, 2)
            columns.append(col)
            signal = signal + col / 10.0
    target = signal + rng.normal(scale=0.5, size=N)
    schema = Schema(tuple(attributes), "y", "numeric")
    return Dataset(schema, columns, target)


# ---------------------------------------------------------------------------
# Verification suite (equivalence + subtraction oracles)
# ---------------------------------------------------------------------------

_SUITE_FOLDS = (2, 3, 5, 10)


@dataclass
class VerificationOutcome:
    datasets: int
    mismatches: list[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def run_equivalence_suite(
    count: int = 50,
    seed: int = 0,
    min_examples: int = 2,
    check_level_wise: bool = True,
) -> VerificationOutcome:
    """Build forests on random datasets and check them against serial trees.

    For every dataset and every fold index, the tree extracted from the
    integrated forest must equal the serially built tree exactly; the
    level-wise and depth-first forests must match; and per-training-set
    statistics derived by subtraction are re-checked against direct
    accumulation during the build.
    """
    mismatches: list[str] = []
    for d in range(count):
        dataset = random_classification_dataset(seed=seed + d)
        n = _SUITE_FOLDS[d % len(_SUITE_FOLDS)]
        if n > dataset.n_examples:
            n = 2
        folds = assign_folds(dataset, n, seed=seed + d)
        config = InductionConfig(
            measure="gain", min_examples=min_examples, n_folds=n, seed=seed + d,
            verify_stats=True,
        )
        forest = grow_forest(dataset, folds, config)
        for i in range(n + 1):
            serial = grow_tree_serial(dataset, training_view(dataset, folds, i), config)
            if not trees_equal(extract_fold_tree(forest, i), serial, True):
                mismatches.append(f"dataset seed={seed + d}: fold {i} tree differs")
        if check_level_wise:
            level_cfg = InductionConfig(
                measure="gain", min_examples=min_examples, n_folds=n, seed=seed + d,
                variant="level",
            )
            level = grow_forest(dataset, folds, level_cfg)
            if not _forests_equal(forest, level):
                mismatches.append(
                    f"dataset seed={seed + d}: level-wise forest differs"
                )
            if level.counters.data_passes != forest_metrics(level).max_depth:
                mismatches.append(
                    f"dataset seed={seed + d}: data passes != forest depth"
                )
    return VerificationOutcome(datasets=count, mismatches=mismatches)


def _forests_equal(a, b) -> bool:
    from .forest import forest_to_json

    return forest_to_json(a) == forest_to_json(b)
