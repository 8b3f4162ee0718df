"""Tabular data loading, schema validation and cross-validation fold assignment."""

from __future__ import annotations

import csv
import io
import zlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

DISCRETE = "discrete"
NUMERIC = "numeric"


class DataError(ValueError):
    """Input data violates the expected tabular format."""


@dataclass(frozen=True)
class AttributeSpec:
    """One input column: a name, a kind, and (for discrete columns) a value domain."""

    name: str
    kind: str
    domain: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (DISCRETE, NUMERIC):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == DISCRETE:
            if not self.domain:
                raise ValueError(f"discrete attribute {self.name!r} needs a non-empty domain")
        elif self.domain is not None:
            raise ValueError(f"numeric attribute {self.name!r} cannot carry a domain")


@dataclass(frozen=True)
class Schema:
    """Attribute layout plus the target column.

    ``target_kind`` is ``"class"`` for classification (with ``classes`` holding
    the label domain in a fixed order) or ``"numeric"`` for regression.
    """

    attributes: tuple[AttributeSpec, ...]
    target_name: str
    target_kind: str
    classes: tuple[str, ...] | None = None

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        if self.target_name in names:
            raise ValueError(f"target {self.target_name!r} also appears as an attribute")
        if self.target_kind == "class":
            if not self.classes:
                raise ValueError("class target needs a non-empty label domain")
        elif self.target_kind == "numeric":
            if self.classes is not None:
                raise ValueError("numeric target cannot carry a label domain")
        else:
            raise ValueError(f"unknown target kind {self.target_kind!r}")

    @property
    def n_classes(self) -> int:
        return len(self.classes) if self.classes else 0

    def attribute_index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(name)


class Dataset:
    """Immutable column-major example table.

    Discrete columns are stored as integer codes into the attribute's domain;
    numeric columns as float64.  The class target is stored as codes into
    ``schema.classes``; a numeric target as float64.
    """

    def __init__(self, schema: Schema, columns: Sequence[np.ndarray], target: np.ndarray):
        if len(columns) != len(schema.attributes):
            raise ValueError("column count does not match schema")
        n = len(target)
        if n < 1:
            raise ValueError("dataset needs at least one example")
        for spec, col in zip(schema.attributes, columns):
            if len(col) != n:
                raise ValueError(f"column {spec.name!r} length mismatch")
        self.schema = schema
        self.columns = [np.asarray(c) for c in columns]
        if schema.target_kind == "class":
            self.target = np.asarray(target, dtype=np.int64)
        else:
            self.target = np.asarray(target, dtype=np.float64)
        for a in self.columns:
            a.setflags(write=False)
        self.target.setflags(write=False)

    @property
    def n_examples(self) -> int:
        return len(self.target)

    def attribute_value(self, example: int, attribute: int):
        """Decode one cell back to its external value."""
        spec = self.schema.attributes[attribute]
        raw = self.columns[attribute][example]
        if spec.kind == DISCRETE:
            return spec.domain[int(raw)]
        return float(raw)

    def target_value(self, example: int):
        if self.schema.target_kind == "class":
            return self.schema.classes[int(self.target[example])]
        return float(self.target[example])

    def example_values(self, example: int) -> dict:
        """All attribute values of one example, keyed by attribute name."""
        return {
            spec.name: self.attribute_value(example, i)
            for i, spec in enumerate(self.schema.attributes)
        }


def _parse_numeric(value: str) -> float | None:
    try:
        return float(value)
    except ValueError:
        return None


def load_dataset(
    source,
    target: str,
    delimiter: str = ",",
    force_kinds: Mapping[str, str] | None = None,
) -> Dataset:
    """Read delimiter-separated text with a header row into a :class:`Dataset`.

    Column kinds are inferred (numeric when every value parses as a number,
    discrete otherwise) unless overridden via ``force_kinds``.  Missing cells
    and unparseable forced-numeric cells are rejected with the offending row
    and column named.  Example order is preserved.
    """
    force_kinds = dict(force_kinds or {})
    close = False
    if isinstance(source, (str, bytes)):
        fh = open(source, "r", encoding="utf-8", newline="")
        close = True
    else:
        fh = source
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    finally:
        if close:
            fh.close()
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("empty file: no header row")
    header = [h.strip() for h in rows[0]]
    if target not in header:
        raise DataError(f"target column {target!r} not found in header")
    body = rows[1:]
    if not body:
        raise DataError("empty file: no data rows")
    ncol = len(header)
    for r, row in enumerate(body, start=2):
        if len(row) != ncol:
            raise DataError(f"row {r}: expected {ncol} fields, found {len(row)}")
        for c, cell in enumerate(row):
            if cell.strip() == "":
                raise DataError(f"missing value at row {r}, column {header[c]!r}")
    for name in force_kinds:
        if name not in header:
            raise DataError(f"forced kind for unknown column {name!r}")

    cells = [[row[c].strip() for row in body] for c in range(ncol)]
    kinds: dict[str, str] = {}
    for c, name in enumerate(header):
        forced = force_kinds.get(name)
        if forced is not None:
            if forced not in (DISCRETE, NUMERIC):
                raise DataError(f"unknown forced kind {forced!r} for column {name!r}")
            if forced == NUMERIC:
                for r, v in enumerate(cells[c], start=2):
                    if _parse_numeric(v) is None:
                        raise DataError(
                            f"unparseable numeric value {v!r} at row {r}, column {name!r}"
                        )
            kinds[name] = forced
        else:
            kinds[name] = (
                NUMERIC if all(_parse_numeric(v) is not None for v in cells[c]) else DISCRETE
            )

    def observed_domain(values: Iterable[str]) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for v in values:
            seen.setdefault(v)
        return tuple(seen)

    attributes = []
    columns = []
    for c, name in enumerate(header):
        if name == target:
            continue
        if kinds[name] == NUMERIC:
            attributes.append(AttributeSpec(name, NUMERIC))
            columns.append(np.array([float(v) for v in cells[c]], dtype=np.float64))
        else:
            domain = observed_domain(cells[c])
            lookup = {v: i for i, v in enumerate(domain)}
            attributes.append(AttributeSpec(name, DISCRETE, domain))
            columns.append(np.array([lookup[v] for v in cells[c]], dtype=np.int64))

    tcol = header.index(target)
    if kinds[target] == NUMERIC:
        schema = Schema(tuple(attributes), target, "numeric")
        tvalues = np.array([float(v) for v in cells[tcol]], dtype=np.float64)
    else:
        classes = observed_domain(cells[tcol])
        lookup = {v: i for i, v in enumerate(classes)}
        schema = Schema(tuple(attributes), target, "class", classes)
        tvalues = np.array([lookup[v] for v in cells[tcol]], dtype=np.int64)
    return Dataset(schema, columns, tvalues)


def load_dataset_text(
    text: str, target: str, delimiter: str = ",", force_kinds=None
) -> Dataset:
    """Like :func:`load_dataset` but from an in-memory string."""
    return load_dataset(io.StringIO(text), target, delimiter, force_kinds)


@dataclass(frozen=True)
class FoldAssignment:
    """Deterministic assignment of every example to one fold in ``1..n``.

    Fold ``i``'s held-out part is ``D_i``; its training set is everything
    else.  Index ``0`` denotes the virtual run over the full dataset.
    """

    n: int
    fold_of: np.ndarray
    seed: int
    stratified: bool

    def __post_init__(self):
        self.fold_of.setflags(write=False)

    @property
    def n_examples(self) -> int:
        return len(self.fold_of)

    def part(self, i: int) -> np.ndarray:
        """Indices of the held-out part D_i, in dataset order."""
        if not 1 <= i <= self.n:
            raise ValueError(f"fold index {i} out of range 1..{self.n}")
        return np.flatnonzero(self.fold_of == i)

    @property
    def signature(self) -> tuple:
        return (self.n, len(self.fold_of), zlib.crc32(self.fold_of.tobytes()))


def assign_folds(
    dataset: Dataset, n: int, seed: int, stratified: bool = False
) -> FoldAssignment:
    """Seeded-shuffle round-robin fold assignment.

    With ``stratified=True`` the shuffle and round-robin run within each class
    stratum, keeping per-class fold sizes balanced to within one example.
    """
    N = dataset.n_examples
    if n < 2:
        raise ValueError(f"fold count must be at least 2, got {n}")
    if n > N:
        raise ValueError(f"fold count {n} exceeds number of examples {N}")
    rng = np.random.default_rng(seed)
    fold_of = np.zeros(N, dtype=np.int64)
    if stratified:
        if dataset.schema.target_kind != "class":
            raise ValueError("stratified folds require a class target")
        for c in range(dataset.schema.n_classes):
            stratum = np.flatnonzero(dataset.target == c)
            perm = rng.permutation(len(stratum))
            fold_of[stratum[perm]] = np.arange(len(stratum)) % n + 1
    else:
        perm = rng.permutation(N)
        fold_of[perm] = np.arange(N) % n + 1
    return FoldAssignment(n=n, fold_of=fold_of, seed=seed, stratified=stratified)


def training_view(dataset: Dataset, folds: FoldAssignment, i: int) -> np.ndarray:
    """Indices of training set ``T_i`` in dataset order (``i=0`` means all)."""
    if not 0 <= i <= folds.n:
        raise ValueError(f"fold index {i} out of range 0..{folds.n}")
    if i == 0:
        return np.arange(dataset.n_examples)
    return np.flatnonzero(folds.fold_of != i)
