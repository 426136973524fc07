"""Relative distance-ratio memorization audit for one generated snapshot.

A generated row x is flagged memorized when r(x) = d1/d2 < tau, where d1 and
d2 are its distances to the nearest and second-nearest training rows.  Two
degenerate cases are pinned down explicitly:

  * d1 = 0 < d2: exact copy of a unique training row, r = 0.
  * d2 = 0: the query coincides with two or more identical training rows.
    Calling that a replica of one specific record is meaningless, so r = 1
    with a degeneracy flag that is surfaced in reports.

The snapshot-level memorization AUC integrates the memorization ratio over
every threshold in [0, 1].  Because all ratios lie in [0, 1], the exact step
integral equals 1 - mean(r); both routes are always computed and compared,
and a disagreement beyond 1e-12 raises `InvariantError`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, EncodedMatrix, EncodedRow, EncodingStats, duplicate_row_groups, encode_dataset
from .errors import ConfigError, InputDataError, InvariantError
from .neighbors import DistanceConfig, top2, top2_batch

MEM_AUC_IDENTITY_TOL = 1e-12


class DuplicateTrainingRowsWarning(UserWarning):
    """Training data contains identical rows; ratios near those rows degenerate."""


@dataclass(frozen=True)
class AuditConfig:
    tau: float = 1.0 / 3.0
    distance: DistanceConfig = field(default_factory=DistanceConfig)

    def __post_init__(self) -> None:
        if not (0.0 < self.tau < 1.0):
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    nn1_id: int
    degenerate: bool


@dataclass(frozen=True)
class AttributionCounts:
    """Per training row: number of memorized generated rows attributed to it."""

    row_ids: np.ndarray
    counts: np.ndarray

    def as_dict(self) -> dict[int, int]:
        return {int(i): int(c) for i, c in zip(self.row_ids, self.counts)}

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class SnapshotAudit:
    """Full audit of one generated snapshot against the training set."""

    tau: float
    gen_row_ids: np.ndarray
    ratios: np.ndarray
    memorized: np.ndarray
    nn1_ids: np.ndarray
    degenerate: np.ndarray
    counts: AttributionCounts
    mem_ratio: float
    mem_auc: float

    @property
    def n_generated(self) -> int:
        return int(self.ratios.size)

    @property
    def n_degenerate(self) -> int:
        return int(self.degenerate.sum())

    def report_dict(self) -> dict:
        return {
            "tau": self.tau,
            "mem_ratio": self.mem_ratio,
            "mem_auc": self.mem_auc,
            "n_generated": self.n_generated,
            "degenerate_ties": self.n_degenerate,
        }


def _ratios_from_dists(nn1_d: np.ndarray, nn2_d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    degenerate = nn2_d == 0.0
    ratios = np.empty_like(nn1_d)
    safe = ~degenerate
    ratios[safe] = nn1_d[safe] / nn2_d[safe]
    ratios[degenerate] = 1.0
    return ratios, degenerate


def ratio(query: EncodedRow, train: EncodedMatrix, cfg: AuditConfig | None = None) -> RatioResult:
    """Distance ratio of one encoded query against the encoded training set."""
    cfg = cfg or AuditConfig()
    hit = top2(query, train, cfg.distance)
    ratios, degenerate = _ratios_from_dists(
        np.array([hit.nn1_dist]), np.array([hit.nn2_dist])
    )
    return RatioResult(ratio=float(ratios[0]), nn1_id=hit.nn1_id, degenerate=bool(degenerate[0]))


def step_integral_mem_auc(ratios: np.ndarray) -> float:
    """Exact integral of tau -> frac(r < tau) over [0, 1] by step summation.

    Independent of the closed form 1 - mean(r); used as its cross-check.
    """
    r = np.sort(np.asarray(ratios, dtype=np.float64))
    n = r.size
    if n == 0:
        raise InputDataError("cannot integrate over an empty ratio set")
    uppers = np.concatenate([r[1:], [1.0]])
    heights = np.arange(1, n + 1, dtype=np.float64) / n
    return math.fsum(h * (u - v) for h, u, v in zip(heights, uppers, r))


def mean_form_mem_auc(ratios: np.ndarray) -> float:
    n = len(ratios)
    if n == 0:
        raise InputDataError("cannot average an empty ratio set")
    return 1.0 - math.fsum(float(x) for x in ratios) / n


def audit_snapshot(
    generated: Dataset,
    train: Dataset,
    stats: EncodingStats,
    cfg: AuditConfig | None = None,
    threads: int = 1,
) -> SnapshotAudit:
    """Audit a generated snapshot: ratios, flags, attribution, and summaries.

    Duplicate training rows are not removed, but a warning lists the groups
    because queries landing on them produce degenerate ratio ties.
    """
    cfg = cfg or AuditConfig()
    if generated.schema != train.schema:
        raise InputDataError("schema mismatch between generated and training datasets")
    if generated.n_rows == 0:
        raise InputDataError("empty generated set")
    if train.n_rows < 2:
        raise InputDataError("training set smaller than 2 rows")

    dupes = duplicate_row_groups(train)
    if dupes:
        shown = ", ".join(str(g) for g in dupes[:10])
        more = "" if len(dupes) <= 10 else f" (+{len(dupes) - 10} more groups)"
        warnings.warn(
            f"training set contains {len(dupes)} duplicate row groups: {shown}{more}",
            DuplicateTrainingRowsWarning,
            stacklevel=2,
        )

    train_enc = encode_dataset(train, stats)
    gen_enc = encode_dataset(generated, stats)
    hits = top2_batch(gen_enc, train_enc, cfg.distance, threads=threads)
    ratios, degenerate = _ratios_from_dists(hits.nn1_dists, hits.nn2_dists)
    memorized = ratios < cfg.tau

    # Attribution reduced in generated-row order via a positional bincount.
    id_to_pos = train.id_to_position()
    positions = np.array([id_to_pos[int(i)] for i in hits.nn1_ids], dtype=np.int64)
    counts = np.bincount(positions[memorized], minlength=train.n_rows).astype(np.int64)

    mem_auc = mean_form_mem_auc(ratios)
    check = step_integral_mem_auc(ratios)
    if abs(mem_auc - check) > MEM_AUC_IDENTITY_TOL:
        raise InvariantError(
            f"mem_auc identity violated: mean form {mem_auc!r} vs step integral {check!r}"
        )

    return SnapshotAudit(
        tau=cfg.tau,
        gen_row_ids=generated.row_ids,
        ratios=ratios,
        memorized=memorized,
        nn1_ids=hits.nn1_ids,
        degenerate=degenerate,
        counts=AttributionCounts(row_ids=train.row_ids, counts=counts),
        mem_ratio=float(np.mean(memorized)),
        mem_auc=mem_auc,
    )


@dataclass(frozen=True)
class CountHistogram:
    """Frequency table of attribution counts, including the zero bin."""

    bins: dict[int, int]
    ranked: tuple[tuple[int, int], ...]

    def to_json_dict(self) -> dict:
        return {
            "bins": {str(k): v for k, v in sorted(self.bins.items())},
            "ranked": [list(pair) for pair in self.ranked],
        }


def count_histogram(counts: AttributionCounts) -> CountHistogram:
    """Tabulate how many training rows carry each attribution count.

    Also emits (rank, count) pairs sorted by descending count for tail
    inspection; count ties rank by ascending row id.
    """
    values, freqs = np.unique(counts.counts, return_counts=True)
    bins = {int(v): int(f) for v, f in zip(values, freqs)}
    order = np.lexsort((counts.row_ids, -counts.counts))
    ranked = tuple((rank + 1, int(counts.counts[pos])) for rank, pos in enumerate(order))
    return CountHistogram(bins=bins, ranked=ranked)
