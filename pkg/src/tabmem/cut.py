"""Score training rows from early memorization intensity and prune the top.

The score of row i pools its per-epoch memorization intensity over the first
T epochs of the trace (the warm-up window).  Default pooling is the mean of
the k largest values with k = ceil(0.1 * T); mean and max pooling exist for
ablation.  Pruning removes exactly ceil(p * N) of the highest-scoring rows,
breaking score ties toward the smaller row id so results are reproducible.

Tag files make the ranking portable: the set of removed (or top-ranked) ids
can be exported from one pipeline and applied verbatim to prune the training
data of another.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Protocol

import numpy as np

from .audit import AttributionCounts
from .data import Dataset
from .errors import ConfigError, InputDataError

POOLINGS = ("top_k_mean", "mean", "max")

# Fraction defining k within the warm-up window; fixed, not a tunable.
TOP_K_FRACTION = 0.1


class SeriesLike(Protocol):
    row_ids: np.ndarray
    mem_auc: np.ndarray


@dataclass(frozen=True)
class CutConfig:
    warmup_epochs: int
    pooling: str = "top_k_mean"
    prune_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.warmup_epochs < 1:
            raise ConfigError("warmup_epochs must be at least 1")
        if self.pooling not in POOLINGS:
            raise ConfigError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if not (0.0 < self.prune_fraction < 1.0):
            raise ConfigError("prune_fraction must lie in (0, 1)")

    @property
    def k(self) -> int:
        return math.ceil(TOP_K_FRACTION * self.warmup_epochs)


@dataclass(frozen=True)
class ScoreTable:
    row_ids: np.ndarray
    scores: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(s) for i, s in zip(self.row_ids, self.scores)}

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row_id", "score"])
            for rid, s in zip(self.row_ids, self.scores):
                writer.writerow([int(rid), format(float(s), ".17g")])

    @classmethod
    def read_csv(cls, path: str | Path) -> "ScoreTable":
        path = Path(path)
        if not path.exists():
            raise InputDataError(f"score table not found: {path}")
        ids, scores = [], []
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["row_id", "score"]:
                raise InputDataError(f"not a score table: {path}")
            for record in reader:
                ids.append(int(record[0]))
                scores.append(float(record[1]))
        return cls(row_ids=np.asarray(ids, dtype=np.int64), scores=np.asarray(scores, dtype=np.float64))


@dataclass(frozen=True)
class TagFile:
    """A portable set of flagged training row ids."""

    source: str
    fraction: float
    ids: tuple[int, ...]

    def save(self, path: str | Path) -> None:
        payload = {"source": self.source, "fraction": self.fraction, "ids": sorted(self.ids)}
        Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TagFile":
        path = Path(path)
        if not path.exists():
            raise InputDataError(f"tag file not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputDataError(f"tag file is not valid JSON: {path}") from exc
        extra = set(obj) - {"source", "fraction", "ids"}
        if extra:
            raise InputDataError(f"tag file has unknown keys: {sorted(extra)}")
        ids = [int(i) for i in obj["ids"]]
        if len(set(ids)) != len(ids):
            raise InputDataError(f"tag file contains duplicate ids: {path}")
        return cls(source=str(obj["source"]), fraction=float(obj["fraction"]), ids=tuple(sorted(ids)))


def _ranked_ids(row_ids: np.ndarray, values: np.ndarray) -> np.ndarray:
    # Descending by value, ascending by id on ties.
    order = np.lexsort((row_ids, -values))
    return row_ids[order]


def score(records: SeriesLike, cfg: CutConfig) -> ScoreTable:
    """Pool each row's intensity series over the first T epochs into a score."""
    series = np.asarray(records.mem_auc, dtype=np.float64)
    if series.ndim != 2:
        raise InputDataError("mem_auc series must be two-dimensional")
    if cfg.warmup_epochs > series.shape[1]:
        raise ConfigError(
            f"warmup_epochs {cfg.warmup_epochs} exceeds trace length {series.shape[1]}"
        )
    window = series[:, : cfg.warmup_epochs]
    if cfg.pooling == "mean":
        scores = window.mean(axis=1)
    elif cfg.pooling == "max":
        scores = window.max(axis=1)
    else:
        k = cfg.k
        top = np.sort(window, axis=1)[:, ::-1][:, :k]
        scores = top.mean(axis=1)
    return ScoreTable(row_ids=np.asarray(records.row_ids, dtype=np.int64), scores=scores)


def tag_by_count(counts: AttributionCounts, fraction: float, source: str = "counts") -> TagFile:
    """Tag the top ceil(fraction * N) rows by attribution count."""
    if not (0.0 < fraction < 1.0):
        raise ConfigError("fraction must lie in (0, 1)")
    n = counts.row_ids.size
    m = math.ceil(fraction * n)
    ranked = _ranked_ids(counts.row_ids, counts.counts.astype(np.float64))
    return TagFile(source=source, fraction=fraction, ids=tuple(sorted(int(i) for i in ranked[:m])))


def prune(train: Dataset, scores: ScoreTable, p: float, source: str = "score_prune") -> tuple[Dataset, TagFile]:
    """Remove exactly ceil(p * N) of the highest-scoring rows.

    Survivors keep their original row ids.  Requires a score for every
    training row; extra score entries are ignored.
    """
    if p <= 0.0:
        raise ConfigError("prune fraction must be positive")
    score_map = scores.as_dict()
    missing = [int(i) for i in train.row_ids if int(i) not in score_map]
    if missing:
        raise InputDataError(f"scores do not cover training rows: {missing[:10]}")
    n = train.n_rows
    m = math.ceil(p * n)
    if m >= n:
        raise ConfigError(f"prune fraction {p} would remove all {n} rows")
    values = np.array([score_map[int(i)] for i in train.row_ids], dtype=np.float64)
    removed = _ranked_ids(train.row_ids, values)[:m]
    removed_ids = tuple(sorted(int(i) for i in removed))
    return train.drop_ids(removed_ids), TagFile(source=source, fraction=p, ids=removed_ids)


def prune_by_tags(train: Dataset, tags: TagFile) -> Dataset:
    """Remove exactly the tagged ids; the cross-pipeline transfer path."""
    return train.drop_ids(tags.ids)


def remove_random(train: Dataset, fraction: float, seed: int) -> Dataset:
    """Remove a uniformly sampled ceil(fraction * N) rows, deterministically."""
    if not (0.0 < fraction < 1.0):
        raise ConfigError("fraction must lie in (0, 1)")
    n = train.n_rows
    m = math.ceil(fraction * n)
    if m >= n:
        raise ConfigError(f"fraction {fraction} would remove all {n} rows")
    rng = np.random.default_rng(seed)
    removed = rng.choice(train.row_ids, size=m, replace=False)
    return train.drop_ids(int(i) for i in removed)


def improvement(base_ratio: float, new_ratio: float) -> float:
    """Relative reduction of a memorization ratio, in percent.

    Rounded half-up to two decimals for reporting; negative values mean the
    intervention made memorization worse.
    """
    if base_ratio <= 0:
        raise ConfigError("base ratio must be positive")
    raw = 100.0 * (base_ratio - new_ratio) / base_ratio
    return float(Decimal(repr(raw)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
