"""Per-training-sample memorization bookkeeping across an epoch-ordered trace.

For every training row and every snapshot epoch we record an indicator bit:
set when at least one generated row from that epoch is memorized (r < tau)
with this row as its nearest neighbor.  Events derive from the bit series:

  * first memorization: earliest epoch with the bit set;
  * forget event: the bit was set at the previous snapshot and is clear now
    (the first epoch can never be a forget event);
  * cumulative counts: total set bits, total forget transitions.

Alongside the bits we keep each row's per-epoch memorization intensity: the
mean of (1 - r) over generated rows attributed to it that epoch, defined as
0 when nothing is attributed so downstream scoring has a total order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .audit import AuditConfig, SnapshotAudit, audit_snapshot
from .data import Dataset, EncodingStats
from .errors import InputDataError

EPOCH_COLUMN_PREFIX = "epoch_"


@dataclass(frozen=True)
class SnapshotTrace:
    """Epoch-ordered generated snapshots from one training run."""

    epochs: tuple[tuple[int, Dataset], ...]

    def __post_init__(self) -> None:
        if not self.epochs:
            raise InputDataError("trace must contain at least one epoch")
        indices = [e for e, _ in self.epochs]
        if any(e <= 0 for e in indices):
            raise InputDataError("epoch indices must be positive")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise InputDataError("epoch indices must be strictly increasing")

    @property
    def epoch_indices(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.epochs)

    def __len__(self) -> int:
        return len(self.epochs)


class MemAucSeries(NamedTuple):
    """Per-row memorization intensity series, as re-loaded from an export."""

    row_ids: np.ndarray
    mem_auc: np.ndarray
    epoch_indices: tuple[int, ...]


def epoch_indicator(audit: SnapshotAudit, n_train: int | np.ndarray, tau: float) -> np.ndarray:
    """Indicator bits over training rows for one audited snapshot.

    `n_train` may be the training row count (ids assumed 0..n-1) or the
    training dataset's id vector when ids are not contiguous.
    """
    if isinstance(n_train, (int, np.integer)):
        ids = np.arange(int(n_train), dtype=np.int64)
    else:
        ids = np.asarray(n_train, dtype=np.int64)
    id_to_pos = {int(r): i for i, r in enumerate(ids)}
    bits = np.zeros(ids.size, dtype=bool)
    hot = audit.ratios < tau
    for rid in audit.nn1_ids[hot]:
        bits[id_to_pos[int(rid)]] = True
    return bits


def events_from_indicators(indicators: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Derive (first_mem_pos, forget_events, cum_mem, cum_forget) from bits.

    `first_mem_pos` is the column index of the first set bit, -1 when never
    set.  `forget_events[i, e]` marks a 1 -> 0 transition into column e.
    """
    indicators = np.asarray(indicators, dtype=bool)
    ever = indicators.any(axis=1)
    first = np.where(ever, indicators.argmax(axis=1), -1).astype(np.int64)
    forget = np.zeros_like(indicators)
    if indicators.shape[1] > 1:
        forget[:, 1:] = indicators[:, :-1] & ~indicators[:, 1:]
    cum_mem = indicators.sum(axis=1).astype(np.int64)
    cum_forget = forget.sum(axis=1).astype(np.int64)
    return first, forget, cum_mem, cum_forget


@dataclass(frozen=True)
class TrainingDynamics:
    """Temporal records for every training row across a snapshot trace."""

    row_ids: np.ndarray
    epoch_indices: tuple[int, ...]
    indicators: np.ndarray
    mem_auc: np.ndarray
    first_mem_pos: np.ndarray
    forget_events: np.ndarray
    cum_mem_cnt: np.ndarray
    cum_forget_cnt: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.row_ids.size)

    @property
    def n_epochs(self) -> int:
        return len(self.epoch_indices)

    def first_mem_epoch(self, position: int) -> int | None:
        pos = int(self.first_mem_pos[position])
        return None if pos < 0 else self.epoch_indices[pos]

    def forget_epochs(self, position: int) -> list[int]:
        return [self.epoch_indices[e] for e in np.flatnonzero(self.forget_events[position])]

    def write_events_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["train_row_id", "first_mem", "cum_mem_cnt", "cum_forget_cnt"])
            for i, rid in enumerate(self.row_ids):
                first = self.first_mem_epoch(i)
                writer.writerow(
                    [int(rid), "" if first is None else first, int(self.cum_mem_cnt[i]), int(self.cum_forget_cnt[i])]
                )

    def write_mem_auc_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["train_row_id"] + [f"{EPOCH_COLUMN_PREFIX}{e:04d}" for e in self.epoch_indices]
            )
            for i, rid in enumerate(self.row_ids):
                writer.writerow([int(rid)] + [format(v, ".17g") for v in self.mem_auc[i]])


def load_mem_auc_csv(path: str | Path) -> MemAucSeries:
    path = Path(path)
    if not path.exists():
        raise InputDataError(f"dynamics export not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputDataError(f"empty file: {path}") from None
        if not header or header[0] != "train_row_id":
            raise InputDataError(f"not a dynamics export: {path}")
        epochs = []
        for name in header[1:]:
            if not name.startswith(EPOCH_COLUMN_PREFIX):
                raise InputDataError(f"unexpected column {name!r} in {path}")
            epochs.append(int(name[len(EPOCH_COLUMN_PREFIX):]))
        ids, rows = [], []
        for record in reader:
            ids.append(int(record[0]))
            rows.append([float(v) for v in record[1:]])
    if not ids:
        raise InputDataError(f"empty file: no data rows in {path}")
    return MemAucSeries(
        row_ids=np.asarray(ids, dtype=np.int64),
        mem_auc=np.asarray(rows, dtype=np.float64),
        epoch_indices=tuple(epochs),
    )


def build_dynamics(
    trace: SnapshotTrace,
    train: Dataset,
    stats: EncodingStats,
    cfg: AuditConfig | None = None,
    threads: int = 1,
) -> TrainingDynamics:
    """Audit every epoch of a trace and assemble per-row temporal records.

    Epochs are processed in trace order (events need it); the per-epoch audit
    itself runs the batched scan.  The result is identical to building on any
    split of the trace and concatenating the per-epoch columns.
    """
    cfg = cfg or AuditConfig()
    n = train.n_rows
    n_epochs = len(trace)
    indicators = np.zeros((n, n_epochs), dtype=bool)
    mem_auc = np.zeros((n, n_epochs), dtype=np.float64)
    id_to_pos = train.id_to_position()

    for e, (_, generated) in enumerate(trace.epochs):
        if generated.schema != train.schema:
            raise InputDataError("schema mismatch between a snapshot and the training set")
        snap = audit_snapshot(generated, train, stats, cfg, threads=threads)
        positions = np.array([id_to_pos[int(i)] for i in snap.nn1_ids], dtype=np.int64)
        indicators[:, e] = np.bincount(positions[snap.memorized], minlength=n) > 0
        attributed = np.bincount(positions, minlength=n).astype(np.float64)
        intensity = np.bincount(positions, weights=1.0 - snap.ratios, minlength=n)
        has = attributed > 0
        mem_auc[has, e] = intensity[has] / attributed[has]

    first, forget, cum_mem, cum_forget = events_from_indicators(indicators)
    return TrainingDynamics(
        row_ids=train.row_ids,
        epoch_indices=trace.epoch_indices,
        indicators=indicators,
        mem_auc=mem_auc,
        first_mem_pos=first,
        forget_events=forget,
        cum_mem_cnt=cum_mem,
        cum_forget_cnt=cum_forget,
    )


@dataclass(frozen=True)
class GroupCurves:
    """Per-epoch series for the tagged (top) and untagged groups."""

    epoch_indices: tuple[int, ...]
    groups: dict[str, dict[str, list[float]]]

    def to_json_dict(self) -> dict:
        return {"epochs": list(self.epoch_indices), "groups": self.groups}


def _series_for(dyn: TrainingDynamics, member_rows: np.ndarray) -> dict[str, list[float]]:
    size = max(1, int(member_rows.size))
    ind = dyn.indicators[member_rows]
    ever = np.logical_or.accumulate(ind, axis=1)
    forget = dyn.forget_events[member_rows]
    forget_per_epoch = forget.sum(axis=0)
    return {
        "cum_frac_memorized": [float(v) / size for v in ever.sum(axis=0)],
        "forget_events": [int(v) for v in forget_per_epoch],
        "cum_forget_events": [int(v) for v in np.cumsum(forget_per_epoch)],
        "mean_mem_auc": [float(v) for v in dyn.mem_auc[member_rows].mean(axis=0)]
        if member_rows.size
        else [0.0] * dyn.n_epochs,
    }


def group_dynamics(dyn: TrainingDynamics, tags: "TagFile") -> GroupCurves:
    """Split rows into tagged vs untagged groups and emit their curve data."""
    known = set(int(i) for i in dyn.row_ids)
    missing = [i for i in tags.ids if i not in known]
    if missing:
        raise InputDataError(f"tag/id mismatch: tagged ids not in dynamics: {missing[:10]}")
    tagged = set(tags.ids)
    top = np.array([i for i, rid in enumerate(dyn.row_ids) if int(rid) in tagged], dtype=np.int64)
    rest = np.array([i for i, rid in enumerate(dyn.row_ids) if int(rid) not in tagged], dtype=np.int64)
    return GroupCurves(
        epoch_indices=dyn.epoch_indices,
        groups={"top": _series_for(dyn, top), "non_top": _series_for(dyn, rest)},
    )


def aggregate_counts(trace: SnapshotTrace, train: Dataset, stats: EncodingStats, cfg: AuditConfig | None = None, threads: int = 1):
    """Total attribution counts over all epochs of a trace."""
    from .audit import AttributionCounts

    cfg = cfg or AuditConfig()
    total = np.zeros(train.n_rows, dtype=np.int64)
    for _, generated in trace.epochs:
        snap = audit_snapshot(generated, train, stats, cfg, threads=threads)
        total += snap.counts.counts
    return AttributionCounts(row_ids=train.row_ids, counts=total)
