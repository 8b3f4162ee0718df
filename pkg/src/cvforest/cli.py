"""Command-line driver: train, xval, bench, gen, verify."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    REGIMES,
    generate_synthetic,
    measure_timings,
    run_equivalence_suite,
)
from .data import DataError, Dataset, assign_folds, load_dataset, training_view
from .evaluation import cross_validation_estimate
from .forest import forest_to_json, tree_to_json
from .induction import (
    InductionConfig,
    VerificationError,
    grow_forest,
    grow_tree_serial,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_input_flags(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="delimiter-separated input file")
    p.add_argument("--target", required=True, help="name of the target column")
    p.add_argument("--tab", action="store_true", help="tab-separated input")
    p.add_argument(
        "--force-discrete",
        action="append",
        default=[],
        metavar="COLUMN",
        help="treat COLUMN as discrete (repeatable)",
    )
    p.add_argument(
        "--force-numeric",
        action="append",
        default=[],
        metavar="COLUMN",
        help="treat COLUMN as numeric (repeatable)",
    )


def _add_induction_flags(p: argparse.ArgumentParser, folds: bool = True):
    if folds:
        p.add_argument("--folds", type=int, default=10, help="fold count n (>= 2)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stratified", action="store_true")
    p.add_argument(
        "--measure", choices=("gain", "gainratio", "variance"), default=None,
        help="split quality measure (default: gain, or variance for numeric targets)",
    )
    p.add_argument("--min-examples", type=int, default=2)
    p.add_argument("--variant", choices=("depth", "level"), default="depth")
    p.add_argument("--verify-stats", action="store_true",
                   help="cross-check subtraction-derived statistics while building")


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--output", default=None, help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> _Parser:
    parser = _Parser(prog="cvforest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="build the actual tree and serialize it")
    _add_input_flags(p)
    _add_induction_flags(p, folds=False)
    p.add_argument("--output", default=None)

    p = sub.add_parser("xval", help="integrated cross-validation: forest + estimate")
    _add_input_flags(p)
    _add_induction_flags(p)
    _add_output_flags(p)
    p.add_argument("--forest-output", default=None,
                   help="also serialize the forest (JSON) to this path")

    p = sub.add_parser("bench", help="time serial vs integrated procedures")
    _add_input_flags(p)
    _add_induction_flags(p)
    _add_output_flags(p)
    p.add_argument("--mode", choices=("serial", "parallel", "both"), default="both")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--plot", action="store_true",
                   help="render figures next to the delimited output")

    p = sub.add_parser("gen", help="generate synthetic benchmark data")
    p.add_argument("--regime", choices=REGIMES, required=True)
    p.add_argument("--examples", type=int, required=True)
    p.add_argument("--attributes", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--tab", action="store_true")

    p = sub.add_parser("verify", help="run the equivalence and subtraction oracles")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-examples", type=int, default=2)

    return parser


def _load(args) -> Dataset:
    force = {}
    for name in args.force_discrete:
        force[name] = "discrete"
    for name in args.force_numeric:
        force[name] = "numeric"
    delimiter = "\t" if args.tab else ","
    return load_dataset(args.input, args.target, delimiter, force)


def _config(args, dataset: Dataset, folds: bool = True) -> InductionConfig:
    measure = args.measure
    if measure is None:
        measure = "variance" if dataset.schema.target_kind == "numeric" else "gain"
    return InductionConfig(
        measure=measure,
        min_examples=args.min_examples,
        n_folds=args.folds if folds else 2,
        seed=args.seed if folds else 0,
        stratified=args.stratified if folds else False,
        variant=args.variant,
        verify_stats=args.verify_stats,
    )


def _emit_text(text: str, output: str | None):
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _emit_csv(rows: list[list], output: str | None):
    if output:
        with open(output, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
    else:
        csv.writer(sys.stdout).writerows(rows)


def _check_folds_flag(args):
    if getattr(args, "folds", None) is not None and args.folds < 2:
        raise UsageError("--folds must be at least 2")
    if getattr(args, "repeats", None) is not None and args.repeats < 1:
        raise UsageError("--repeats must be at least 1")


def _cmd_train(args) -> int:
    dataset = _load(args)
    config = _config(args, dataset, folds=False)
    tree = grow_tree_serial(dataset, np.arange(dataset.n_examples), config)
    _emit_text(tree_to_json(tree, dataset.schema), args.output)
    return EXIT_OK


def _cmd_xval(args) -> int:
    dataset = _load(args)
    config = _config(args, dataset)
    folds = assign_folds(dataset, args.folds, args.seed, args.stratified)
    forest = grow_forest(dataset, folds, config)
    if args.forest_output:
        Path(args.forest_output).write_text(
            forest_to_json(forest, dataset.schema) + "\n", encoding="utf-8"
        )
    report = cross_validation_estimate(forest, dataset, folds)
    if args.format == "json":
        _emit_text(json.dumps(report.to_dict(), indent=2), args.output)
    else:
        _emit_csv(report.to_csv_rows(), args.output)
    return EXIT_OK


def _cmd_bench(args) -> int:
    dataset = _load(args)
    config = _config(args, dataset)
    report = measure_timings(dataset, config, repeats=args.repeats, mode=args.mode)
    if args.format == "json":
        _emit_text(json.dumps(report.to_dict(), indent=2), args.output)
    else:
        _emit_csv(report.summary_rows(), args.output)
        if args.output:
            stem = Path(args.output)
            _emit_csv(report.level_rows(), str(stem.with_name(stem.stem + "_levels.csv")))
        else:
            print()
            _emit_csv(report.level_rows(), None)
    if args.plot:
        from .plots import render_level_profile, render_overhead

        stem = Path(args.output) if args.output else Path("bench")
        render_level_profile(report, str(stem.with_name(stem.stem + "_levels.png")))
        render_overhead(report, str(stem.with_name(stem.stem + "_overhead.png")))
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.examples < 1:
        raise UsageError("--examples must be positive")
    dataset = generate_synthetic(args.regime, args.examples, args.attributes, args.seed)
    delimiter = "\t" if args.tab else ","
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        names = [a.name for a in dataset.schema.attributes] + [dataset.schema.target_name]
        writer.writerow(names)
        for i in range(dataset.n_examples):
            row = [dataset.attribute_value(i, c) for c in range(len(dataset.schema.attributes))]
            row.append(dataset.target_value(i))
            writer.writerow(row)
    return EXIT_OK


def _cmd_verify(args) -> int:
    outcome = run_equivalence_suite(
        count=args.count, seed=args.seed, min_examples=args.min_examples
    )
    if outcome.ok:
        print(f"verify: {outcome.datasets} datasets, all equivalence and "
              "subtraction checks passed")
        return EXIT_OK
    for m in outcome.mismatches:
        print(f"verify: MISMATCH {m}", file=sys.stderr)
    return EXIT_VERIFY


_COMMANDS = {
    "train": _cmd_train,
    "xval": _cmd_xval,
    "bench": _cmd_bench,
    "gen": _cmd_gen,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_folds_flag(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
