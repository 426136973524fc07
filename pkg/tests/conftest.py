from __future__ import annotations

import numpy as np
import pytest

from tabmem.data import CATEGORICAL, NUMERICAL, Column, Dataset, TableSchema


def make_schema(n_numeric: int = 1, n_categorical: int = 1) -> TableSchema:
    columns = [Column(f"n{j}", NUMERICAL) for j in range(n_numeric)]
    columns += [Column(f"c{j}", CATEGORICAL) for j in range(n_categorical)]
    columns.append(Column("label", CATEGORICAL))
    return TableSchema(columns=tuple(columns), label_column="label")


def make_dataset(
    numeric: dict[str, list[float]] | None = None,
    categorical: dict[str, list[str]] | None = None,
    labels: list[str] | None = None,
    row_ids: list[int] | None = None,
) -> Dataset:
    numeric = numeric or {}
    categorical = categorical or {}
    n = len(labels) if labels is not None else len(next(iter({**numeric, **categorical}.values())))
    labels = labels if labels is not None else ["x"] * n
    columns = [Column(name, NUMERICAL) for name in numeric]
    columns += [Column(name, CATEGORICAL) for name in categorical]
    columns.append(Column("label", CATEGORICAL))
    schema = TableSchema(columns=tuple(columns), label_column="label")
    cols: dict[str, np.ndarray] = {}
    for name, vals in numeric.items():
        cols[name] = np.asarray(vals, dtype=np.float64)
    for name, vals in categorical.items():
        cols[name] = np.asarray(vals, dtype=object)
    cols["label"] = np.asarray(labels, dtype=object)
    ids = np.asarray(row_ids, dtype=np.int64) if row_ids is not None else np.arange(n, dtype=np.int64)
    return Dataset(schema=schema, columns=cols, row_ids=ids)


def random_mixed_dataset(
    rng: np.random.Generator,
    n_rows: int,
    n_numeric: int = 3,
    n_categorical: int = 2,
    n_classes: int = 2,
    cardinality: int = 4,
) -> Dataset:
    schema = make_schema(n_numeric, n_categorical)
    cols: dict[str, np.ndarray] = {}
    for j in range(n_numeric):
        cols[f"n{j}"] = rng.normal(size=n_rows)
    for j in range(n_categorical):
        cols[f"c{j}"] = np.array([f"v{k}" for k in rng.integers(0, cardinality, n_rows)], dtype=object)
    cols["label"] = np.array([f"cls{k}" for k in rng.integers(0, n_classes, n_rows)], dtype=object)
    return Dataset(schema=schema, columns=cols, row_ids=np.arange(n_rows, dtype=np.int64))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
