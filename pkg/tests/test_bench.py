import warnings

import numpy as np
import pytest

from cvforest import (
    InductionConfig,
    assign_folds,
    grow_forest,
    measure_timings,
    speedup_bound,
)
from cvforest.bench import (
    CostModel,
    TimingReport,
    generate_synthetic,
    overhead_percent,
    per_level_profile,
    random_classification_dataset,
    random_regression_dataset,
    run_equivalence_suite,
    speedup,
)
from cvforest.forest import LevelProfile, forest_metrics


class TestMetricFormulas:
    def test_speedup_and_overheads(self):
        assert speedup(31.0, 3.4) == pytest.approx(9.1176, abs=1e-3)
        assert overhead_percent(31.0, 2.6) == pytest.approx(1092.3, abs=0.1)
        assert overhead_percent(0.10, 0.028) == pytest.approx(257.14, abs=0.01)
        assert overhead_percent(2.6, 2.6) == 0.0

    def test_report_derived_properties(self):
        report = TimingReport(n=10, n_examples=1000, a=30, repeats=3,
                              t_a=2.6, t_s=31.0, t_p=3.4)
        assert report.s == pytest.approx(31.0 / 3.4)
        assert report.o_s == pytest.approx(100 * (31.0 / 2.6 - 1))
        assert report.o_p == pytest.approx(100 * (3.4 / 2.6 - 1))
        d = report.to_dict()
        assert d["derived"]["S"] == report.s
        assert d["timings"] == {"T_a": 2.6, "T_s": 31.0, "T_p": 3.4}

    def test_missing_timings_yield_none(self):
        report = TimingReport(n=5, n_examples=10, a=3, repeats=1, t_a=1.0)
        assert report.s is None and report.o_s is None and report.o_p is None


class TestSpeedupBound:
    def test_partition_free_limit_reaches_n(self):
        worst, best = speedup_bound(n=10, a=50, t_e=1.0, t_p=1.0)
        assert (worst, best) == (10.0, 10.0)

    def test_worst_case_formula(self):
        worst, best = speedup_bound(n=10, a=5, t_e=1.0, t_p=1.0)
        assert worst == pytest.approx(6.0)
        assert best == 10.0

    def test_expensive_partitioning_drives_bound_to_one(self):
        worst, _ = speedup_bound(n=10, a=5, t_e=1.0, t_p=1e6)
        assert worst == pytest.approx(1.0, abs=1e-4)

    def test_monotone_in_test_count(self):
        bounds = [speedup_bound(10, a, 1.0, 3.0)[0] for a in (1, 5, 10, 20)]
        assert bounds == sorted(bounds)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            speedup_bound(1, 5, 1.0, 1.0)
        with pytest.raises(ValueError):
            speedup_bound(5, 0, 1.0, 1.0)
        with pytest.raises(ValueError):
            speedup_bound(5, 5, 0.0, 1.0)


class TestSynthetic:
    def test_deterministic_per_seed(self):
        a = generate_synthetic("stable", 200, 5, seed=9)
        b = generate_synthetic("stable", 200, 5, seed=9)
        assert np.array_equal(a.target, b.target)
        for ca, cb in zip(a.columns, b.columns):
            assert np.array_equal(ca, cb)

    def test_requested_shape(self):
        ds = generate_synthetic("unstable", 150, 7, seed=1)
        assert ds.n_examples == 150
        assert len(ds.schema.attributes) == 7

    def test_stable_regime_produces_full_sharing(self):
        ds = generate_synthetic("stable", 1000, 20, seed=4)
        folds = assign_folds(ds, 10, seed=4)
        forest = grow_forest(ds, folds, InductionConfig(n_folds=10, seed=4))
        metrics = forest_metrics(forest)
        assert metrics.bifurcation_count == 0
        assert all(f == 1.0 for f in metrics.f_per_level.values())

    def test_unstable_regime_produces_divergence(self):
        ds = generate_synthetic("unstable", 400, 8, seed=4)
        folds = assign_folds(ds, 10, seed=4)
        forest = grow_forest(ds, folds, InductionConfig(n_folds=10, seed=4))
        metrics = forest_metrics(forest)
        assert max(metrics.f_per_level.values()) > 1.0

    def test_unknown_regime_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic("chaotic", 10, 2, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic("stable", 0, 2, seed=0)

    def test_random_dataset_generators(self):
        cls = random_classification_dataset(seed=7)
        assert cls.schema.target_kind == "class"
        assert all(a.kind == "discrete" for a in cls.schema.attributes)
        reg = random_regression_dataset(seed=7)
        assert reg.schema.target_kind == "numeric"


class TestMeasureTimings:
    def test_both_mode_full_report(self):
        ds = generate_synthetic("stable", 4000, 10, seed=2)
        config = InductionConfig(n_folds=5, seed=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = measure_timings(ds, config, repeats=2, mode="both")
        assert report.t_a is not None and report.t_s is not None and report.t_p is not None
        assert report.s == pytest.approx(report.t_s / report.t_p)
        assert report.parallel_counters["evaluations"] > 0
        assert report.serial_counters["evaluations"] > 0
        assert report.analytic_speedup == pytest.approx(
            report.serial_counters["evaluations"] / report.parallel_counters["evaluations"]
        )
        assert report.cost_model is not None
        worst, best = speedup_bound(
            report.n, report.cost_model.a, report.cost_model.t_e, report.cost_model.t_p
        )
        assert (report.bound_worst, report.bound_best) == (worst, best)
        assert best == report.n
        assert report.levels and report.levels[0].level == 1

    def test_single_sided_modes(self):
        ds = generate_synthetic("stable", 2000, 6, seed=3)
        config = InductionConfig(n_folds=4, seed=3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            serial = measure_timings(ds, config, repeats=1, mode="serial")
            parallel = measure_timings(ds, config, repeats=1, mode="parallel")
        assert serial.t_s is not None and serial.t_p is None
        assert parallel.t_p is not None and parallel.t_s is None
        assert parallel.cost_model is not None

    def test_short_readings_escalate_repeats_with_warning(self, monkeypatch):
        import cvforest.bench as bench_module

        # force every reading to look like timer noise
        monkeypatch.setattr(bench_module, "_MIN_RELIABLE_SECONDS", 1e6)
        ds = generate_synthetic("stable", 30, 2, seed=5)
        config = InductionConfig(n_folds=2, seed=5)
        with pytest.warns(RuntimeWarning, match="escalating repeats"):
            report = measure_timings(ds, config, repeats=1, mode="parallel")
        assert report.repeats == bench_module._MAX_REPEATS

    def test_unknown_mode(self):
        ds = generate_synthetic("stable", 50, 2, seed=5)
        with pytest.raises(ValueError):
            measure_timings(ds, InductionConfig(n_folds=2), mode="fastest")


class TestLevelProfileMerge:
    def test_merges_disjoint_levels(self):
        parallel = {1: LevelProfile(seconds=0.5, nodes=1, choice_group_counts=[2])}
        serial = {1: 0.8, 2: 0.1}
        rows = per_level_profile(parallel, serial)
        assert [r.level for r in rows] == [1, 2]
        assert rows[0].t_r_parallel == 0.5
        assert rows[0].t_r_serial == 0.8
        assert rows[0].f == 2.0
        assert rows[1].t_r_parallel is None and rows[1].t_r_serial == 0.1

    def test_summary_and_level_rows(self):
        report = TimingReport(n=3, n_examples=10, a=4, repeats=1,
                              t_a=1.0, t_s=2.0, t_p=1.5)
        report.levels = per_level_profile(None, {1: 0.5})
        rows = report.summary_rows()
        assert rows[0] == ["metric", "value"]
        assert ["S", 2.0 / 1.5] in rows
        level_rows = report.level_rows()
        assert level_rows[0] == ["level", "t_r_parallel", "t_r_serial", "f"]
        assert level_rows[1] == [1, None, 0.5, None]


class TestEquivalenceSuiteHarness:
    def test_reports_dataset_count_and_status(self):
        outcome = run_equivalence_suite(count=4, seed=7)
        assert outcome.datasets == 4
        assert outcome.ok
        assert outcome.mismatches == []
