"""Schema handling, CSV ingestion, and the standardized encoding.

Every distance and metric in this package operates on the encoding produced
here: numerical columns are z-scored with training-set statistics (population
standard deviation, floored at 1e-8 so division is always defined) and
categorical columns are mapped to vocabulary indices in first-appearance
order, with one reserved index for values never seen at fit time.  Generated
snapshots may contain novel category strings, so encoding never fails on
unseen values.

Datasets are immutable after construction and keep their row ids through any
filtering, which is what makes pruning results and tag files portable.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import InputDataError

NUMERICAL = "numerical"
CATEGORICAL = "categorical"
_KINDS = (NUMERICAL, CATEGORICAL)

SCHEMA_FORMAT_VERSION = 1

# Population std floor: keeps standardization defined on constant columns.
STD_FLOOR = 1e-8


def format_cell(value: float | str) -> str:
    """Render a cell for CSV output; floats use 17 significant digits."""
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass(frozen=True)
class TableSchema:
    """Ordered column declarations plus the categorical label column."""

    columns: tuple[Column, ...]
    label_column: str
    version: int = SCHEMA_FORMAT_VERSION

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if not names:
            raise InputDataError("schema declares no columns")
        if any(not n for n in names):
            raise InputDataError("schema contains an empty column name")
        if len(set(names)) != len(names):
            raise InputDataError("schema column names are not unique")
        for c in self.columns:
            if c.kind not in _KINDS:
                raise InputDataError(f"unknown column kind: {c.kind!r}")
        kinds = {c.name: c.kind for c in self.columns}
        if self.label_column not in kinds:
            raise InputDataError(f"missing column: label {self.label_column!r} not declared")
        if kinds[self.label_column] != CATEGORICAL:
            raise InputDataError("label column must be categorical")
        if len(names) < 2:
            raise InputDataError("schema needs at least one non-label column")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def numerical_columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == NUMERICAL)

    @property
    def categorical_columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.kind == CATEGORICAL)

    @property
    def non_label_columns(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if n != self.label_column)

    def kind_of(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise InputDataError(f"missing column: {name!r}")

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "label": self.label_column,
            "columns": [{"name": c.name, "kind": c.kind} for c in self.columns],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TableSchema":
        if not isinstance(obj, dict):
            raise InputDataError("schema file must contain a JSON object")
        extra = set(obj) - {"version", "label", "columns"}
        if extra:
            raise InputDataError(f"schema file has unknown keys: {sorted(extra)}")
        for key in ("version", "label", "columns"):
            if key not in obj:
                raise InputDataError(f"schema file missing key {key!r}")
        columns = []
        for entry in obj["columns"]:
            extra = set(entry) - {"name", "kind"}
            if extra:
                raise InputDataError(f"schema column entry has unknown keys: {sorted(extra)}")
            columns.append(Column(name=entry["name"], kind=entry["kind"]))
        return cls(columns=tuple(columns), label_column=obj["label"], version=int(obj["version"]))


def load_schema(path: str | Path) -> TableSchema:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"schema file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputDataError(f"schema file is not valid JSON: {path}") from exc
    return TableSchema.from_json_dict(obj)


def save_schema(schema: TableSchema, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(schema.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


@dataclass(frozen=True)
class Dataset:
    """Immutable column-major table with stable row ids.

    Numerical columns are float64 arrays, categorical columns are object
    arrays of strings.  Row ids survive filtering and pruning unchanged;
    they are only assigned fresh (0..N-1 in file order) at ingestion time.
    """

    schema: TableSchema
    columns: dict[str, np.ndarray]
    row_ids: np.ndarray

    def __post_init__(self) -> None:
        expected = set(self.schema.names)
        got = set(self.columns)
        if expected != got:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise InputDataError(f"dataset columns mismatch schema (missing={missing}, extra={extra})")
        ids = np.asarray(self.row_ids, dtype=np.int64)
        if ids.ndim != 1:
            raise InputDataError("row_ids must be one-dimensional")
        if ids.size and ids.min() < 0:
            raise InputDataError("row_ids must be non-negative")
        if len(np.unique(ids)) != ids.size:
            raise InputDataError("row_ids must be unique")
        normalized: dict[str, np.ndarray] = {}
        for name in self.schema.names:
            raw = self.columns[name]
            if self.schema.kind_of(name) == NUMERICAL:
                arr = np.asarray(raw, dtype=np.float64)
                if arr.shape != (ids.size,):
                    raise InputDataError(f"column {name!r} has wrong length")
                if arr.size and not np.all(np.isfinite(arr)):
                    raise InputDataError(f"non-finite numeric value in column {name!r}")
            else:
                arr = np.asarray(raw, dtype=object)
                if arr.shape != (ids.size,):
                    raise InputDataError(f"column {name!r} has wrong length")
                arr = np.array([str(v) for v in arr], dtype=object)
            arr.setflags(write=False)
            normalized[name] = arr
        ids.setflags(write=False)
        object.__setattr__(self, "columns", normalized)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n_rows(self) -> int:
        return int(self.row_ids.size)

    @property
    def label_values(self) -> np.ndarray:
        return self.columns[self.schema.label_column]

    def take(self, positions: np.ndarray) -> "Dataset":
        """Subset by positional indices; row ids are preserved, never renumbered."""
        positions = np.asarray(positions, dtype=np.int64)
        cols = {name: self.columns[name][positions] for name in self.schema.names}
        return Dataset(schema=self.schema, columns=cols, row_ids=self.row_ids[positions])

    def drop_ids(self, ids: Iterable[int]) -> "Dataset":
        drop = set(int(i) for i in ids)
        unknown = drop - set(int(i) for i in self.row_ids)
        if unknown:
            raise InputDataError(f"tag/id mismatch: ids not present in dataset: {sorted(unknown)[:10]}")
        keep = np.array([i for i, rid in enumerate(self.row_ids) if int(rid) not in drop], dtype=np.int64)
        return self.take(keep)

    def positions_by_class(self) -> dict[str, np.ndarray]:
        groups: dict[str, list[int]] = {}
        for pos, value in enumerate(self.label_values):
            groups.setdefault(value, []).append(pos)
        return {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}

    def row_mapping(self, position: int) -> dict[str, float | str]:
        return {name: self.columns[name][position] for name in self.schema.names}

    def id_to_position(self) -> dict[int, int]:
        return {int(rid): pos for pos, rid in enumerate(self.row_ids)}


def load_dataset(csv_path: str | Path, schema: TableSchema) -> Dataset:
    """Ingest an RFC-4180 CSV with a header row matching the schema.

    Header order is free; missing columns, unparsable or non-finite numeric
    values, and empty cells are errors.  No imputation is performed.
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise InputDataError(f"data file not found: {csv_path}")
    with csv_path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputDataError(f"empty file: {csv_path}") from None
        missing = [n for n in schema.names if n not in header]
        if missing:
            raise InputDataError(f"missing column: {missing[0]!r} in {csv_path}")
        extra = [n for n in header if n not in schema.names]
        if extra:
            raise InputDataError(f"unexpected column: {extra[0]!r} in {csv_path}")
        col_idx = {name: header.index(name) for name in schema.names}
        raw: dict[str, list] = {name: [] for name in schema.names}
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise InputDataError(f"row at line {line_no} has {len(record)} cells, expected {len(header)}")
            for name in schema.names:
                cell = record[col_idx[name]]
                if schema.kind_of(name) == NUMERICAL:
                    if cell == "":
                        raise InputDataError(f"missing cell in numerical column {name!r} at line {line_no}")
                    try:
                        value = float(cell)
                    except ValueError:
                        raise InputDataError(
                            f"non-finite numeric: cannot parse {cell!r} in column {name!r} at line {line_no}"
                        ) from None
                    if not math.isfinite(value):
                        raise InputDataError(
                            f"non-finite numeric: {cell!r} in column {name!r} at line {line_no}"
                        )
                    raw[name].append(value)
                else:
                    if cell == "":
                        raise InputDataError(f"missing cell in categorical column {name!r} at line {line_no}")
                    raw[name].append(cell)
    n = len(raw[schema.names[0]])
    if n == 0:
        raise InputDataError(f"empty file: no data rows in {csv_path}")
    columns = {
        name: np.asarray(values, dtype=object if schema.kind_of(name) == CATEGORICAL else np.float64)
        for name, values in raw.items()
    }
    return Dataset(schema=schema, columns=columns, row_ids=np.arange(n, dtype=np.int64))


def write_dataset(dataset: Dataset, path: str | Path, extra_columns: Mapping[str, Iterable[str]] | None = None) -> None:
    """Write a dataset as CSV in schema column order.

    `extra_columns` appends non-schema columns (e.g. provenance tags) after
    the schema columns; they are ignored by `load_dataset`.
    """
    extras = {k: list(v) for k, v in (extra_columns or {}).items()}
    for k, v in extras.items():
        if len(v) != dataset.n_rows:
            raise InputDataError(f"extra column {k!r} has wrong length")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.schema.names) + list(extras))
        for i in range(dataset.n_rows):
            row = [format_cell(dataset.columns[name][i]) for name in dataset.schema.names]
            row.extend(extras[k][i] for k in extras)
            writer.writerow(row)


@dataclass(frozen=True)
class EncodingStats:
    """Training-set statistics that define the encoded representation."""

    schema: TableSchema
    means: dict[str, float]
    stds: dict[str, float]
    vocabularies: dict[str, tuple[str, ...]]
    frequencies: dict[str, dict[str, int]]

    def vocabulary_index(self, column: str) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vocabularies[column])}

    def unseen_index(self, column: str) -> int:
        # Reserved slot for category values absent from the training data.
        return len(self.vocabularies[column])


def fit_encoding(train: Dataset) -> EncodingStats:
    """Estimate per-column statistics on the training data only."""
    if train.n_rows == 0:
        raise InputDataError("empty dataset: cannot fit encoding")
    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    vocabularies: dict[str, tuple[str, ...]] = {}
    frequencies: dict[str, dict[str, int]] = {}
    for name in train.schema.numerical_columns:
        col = train.columns[name]
        means[name] = float(np.mean(col))
        stds[name] = max(float(np.std(col)), STD_FLOOR)  # population std, floored
    for name in train.schema.categorical_columns:
        col = train.columns[name]
        vocabularies[name] = tuple(dict.fromkeys(col))  # first-appearance order
        frequencies[name] = dict(Counter(col))
    return EncodingStats(
        schema=train.schema, means=means, stds=stds, vocabularies=vocabularies, frequencies=frequencies
    )


@dataclass(frozen=True)
class EncodedRow:
    """One row in encoded space: standardized numerics plus category indices."""

    numeric: np.ndarray
    categorical: np.ndarray
    label_cat_index: int | None = None


@dataclass(frozen=True)
class EncodedMatrix:
    """A dataset in encoded space, ready for batched distance scans."""

    schema: TableSchema
    numeric: np.ndarray
    categorical: np.ndarray
    row_ids: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.row_ids.size)

    @property
    def label_cat_index(self) -> int:
        return self.schema.categorical_columns.index(self.schema.label_column)

    def row(self, position: int) -> EncodedRow:
        return EncodedRow(
            numeric=self.numeric[position],
            categorical=self.categorical[position],
            label_cat_index=self.label_cat_index,
        )


def encode(row: Mapping[str, float | str], stats: EncodingStats) -> EncodedRow:
    """Encode a single row; unseen categories map to the reserved index."""
    schema = stats.schema
    numeric = np.array(
        [(float(row[n]) - stats.means[n]) / stats.stds[n] for n in schema.numerical_columns],
        dtype=np.float64,
    )
    cats = []
    for n in schema.categorical_columns:
        index = stats.vocabulary_index(n)
        cats.append(index.get(str(row[n]), stats.unseen_index(n)))
    return EncodedRow(
        numeric=numeric,
        categorical=np.array(cats, dtype=np.int64),
        label_cat_index=schema.categorical_columns.index(schema.label_column),
    )


def encode_dataset(dataset: Dataset, stats: EncodingStats) -> EncodedMatrix:
    if dataset.schema != stats.schema:
        raise InputDataError("schema mismatch between dataset and encoding statistics")
    n = dataset.n_rows
    num_cols = stats.schema.numerical_columns
    cat_cols = stats.schema.categorical_columns
    numeric = np.empty((n, len(num_cols)), dtype=np.float64)
    for j, name in enumerate(num_cols):
        numeric[:, j] = (dataset.columns[name] - stats.means[name]) / stats.stds[name]
    categorical = np.empty((n, len(cat_cols)), dtype=np.int64)
    for j, name in enumerate(cat_cols):
        index = stats.vocabulary_index(name)
        unseen = stats.unseen_index(name)
        categorical[:, j] = [index.get(v, unseen) for v in dataset.columns[name]]
    numeric.setflags(write=False)
    categorical.setflags(write=False)
    return EncodedMatrix(schema=stats.schema, numeric=numeric, categorical=categorical, row_ids=dataset.row_ids)


def duplicate_row_groups(dataset: Dataset) -> list[list[int]]:
    """Groups of row ids whose raw values are identical across all columns."""
    seen: dict[tuple, list[int]] = {}
    names = dataset.schema.names
    for pos in range(dataset.n_rows):
        key = tuple(dataset.columns[name][pos] for name in names)
        seen.setdefault(key, []).append(int(dataset.row_ids[pos]))
    return sorted([ids for ids in seen.values() if len(ids) > 1], key=lambda g: g[0])
