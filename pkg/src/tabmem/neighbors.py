"""Mixed-type distance metric and exact batched top-2 nearest-neighbor scan.

The metric is Euclidean over standardized numerics combined with unit-cost
mismatch counts over categorical indices, under a single square root:

    d(a, b) = sqrt(w_num * sum_j (a_j - b_j)^2 + w_cat * sum_k [a_k != b_k])

This is a true metric on a concatenated embedding, so ratios of distances
are scale-free.  Search is exact; nothing approximate is allowed anywhere
near the memorization threshold.  All ties break toward the smaller row id,
which makes every result reproducible regardless of blocking or thread
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import EncodedMatrix, EncodedRow
from .errors import ConfigError, InputDataError

_ID_SENTINEL = np.iinfo(np.int64).max

# Upper bound on elements of the (block x train x features) difference cube.
_BLOCK_ELEMENT_BUDGET = 4_000_000


@dataclass(frozen=True)
class DistanceConfig:
    numeric_weight: float = 1.0
    categorical_weight: float = 1.0
    include_label: bool = True

    def __post_init__(self) -> None:
        if self.numeric_weight < 0 or self.categorical_weight < 0:
            raise ConfigError("distance weights must be non-negative")
        if self.numeric_weight == 0 and self.categorical_weight == 0:
            raise ConfigError("at least one distance weight must be positive")


@dataclass(frozen=True)
class Top2Result:
    nn1_id: int
    nn1_dist: float
    nn2_id: int
    nn2_dist: float


@dataclass(frozen=True)
class Top2Batch:
    """Struct-of-arrays result; elementwise identical to mapping `top2`."""

    nn1_ids: np.ndarray
    nn1_dists: np.ndarray
    nn2_ids: np.ndarray
    nn2_dists: np.ndarray

    def __len__(self) -> int:
        return int(self.nn1_ids.size)

    def __getitem__(self, i: int) -> Top2Result:
        return Top2Result(
            nn1_id=int(self.nn1_ids[i]),
            nn1_dist=float(self.nn1_dists[i]),
            nn2_id=int(self.nn2_ids[i]),
            nn2_dist=float(self.nn2_dists[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def _matrix_parts(matrix: EncodedMatrix, cfg: DistanceConfig) -> tuple[np.ndarray, np.ndarray]:
    numeric = matrix.numeric
    categorical = matrix.categorical
    if not cfg.include_label:
        keep = [j for j in range(categorical.shape[1]) if j != matrix.label_cat_index]
        categorical = categorical[:, keep]
    return numeric, categorical


def _row_parts(row: EncodedRow, cfg: DistanceConfig) -> tuple[np.ndarray, np.ndarray]:
    categorical = row.categorical
    if not cfg.include_label:
        if row.label_cat_index is None:
            raise ConfigError("include_label=False requires rows encoded with a label position")
        keep = [j for j in range(categorical.shape[0]) if j != row.label_cat_index]
        categorical = categorical[keep]
    return row.numeric, categorical


def distance(a: EncodedRow, b: EncodedRow, cfg: DistanceConfig | None = None) -> float:
    """Distance between two encoded rows; zero iff they encode identically."""
    cfg = cfg or DistanceConfig()
    an, ac = _row_parts(a, cfg)
    bn, bc = _row_parts(b, cfg)
    if an.shape != bn.shape or ac.shape != bc.shape:
        raise InputDataError("shape mismatch between encoded rows")
    total = 0.0
    if an.size:
        diff = an - bn
        total += cfg.numeric_weight * float(np.sum(diff * diff))
    if ac.size:
        total += cfg.categorical_weight * float(np.sum(ac != bc))
    return math.sqrt(total)


def _sq_dist_block(
    qn: np.ndarray, qc: np.ndarray, tn: np.ndarray, tc: np.ndarray, cfg: DistanceConfig
) -> np.ndarray:
    d2 = np.zeros((qn.shape[0], tn.shape[0]), dtype=np.float64)
    if qn.shape[1]:
        diff = qn[:, None, :] - tn[None, :, :]
        d2 += cfg.numeric_weight * np.sum(diff * diff, axis=-1)
    if qc.shape[1]:
        mism = np.sum(qc[:, None, :] != tc[None, :, :], axis=-1, dtype=np.float64)
        d2 += cfg.categorical_weight * mism
    return d2


def _top2_block(d2: np.ndarray, train_ids: np.ndarray) -> tuple[np.ndarray, ...]:
    # Smallest distance, ids resolve exact ties; then mask the winner and repeat.
    m1 = d2.min(axis=1)
    nn1 = np.where(d2 == m1[:, None], train_ids[None, :], _ID_SENTINEL).min(axis=1)
    masked = np.where(train_ids[None, :] == nn1[:, None], np.inf, d2)
    m2 = masked.min(axis=1)
    nn2 = np.where(masked == m2[:, None], train_ids[None, :], _ID_SENTINEL).min(axis=1)
    return nn1, np.sqrt(m1), nn2, np.sqrt(m2)


def _block_size(n_train: int, width: int) -> int:
    return max(1, _BLOCK_ELEMENT_BUDGET // max(1, n_train * max(1, width)))


def top2_batch(
    queries: EncodedMatrix,
    train: EncodedMatrix,
    cfg: DistanceConfig | None = None,
    threads: int = 1,
) -> Top2Batch:
    """Exact two nearest training rows for every query row.

    Elementwise identical to calling `top2` per query.  Queries are processed
    in blocks sized to bound temporary memory; blocks may run on a thread
    pool, and results are written to fixed slots so the output never depends
    on scheduling.
    """
    cfg = cfg or DistanceConfig()
    if train.n_rows < 2:
        raise InputDataError("training set smaller than 2 rows")
    qn, qc = _matrix_parts(queries, cfg)
    tn, tc = _matrix_parts(train, cfg)
    if qn.shape[1] != tn.shape[1] or qc.shape[1] != tc.shape[1]:
        raise InputDataError("shape mismatch between query and training encodings")
    n = queries.n_rows
    nn1_ids = np.empty(n, dtype=np.int64)
    nn2_ids = np.empty(n, dtype=np.int64)
    nn1_d = np.empty(n, dtype=np.float64)
    nn2_d = np.empty(n, dtype=np.float64)
    if n == 0:
        return Top2Batch(nn1_ids, nn1_d, nn2_ids, nn2_d)

    block = _block_size(train.n_rows, qn.shape[1] + qc.shape[1])
    spans = [(s, min(s + block, n)) for s in range(0, n, block)]
    train_ids = np.asarray(train.row_ids, dtype=np.int64)

    def run(span: tuple[int, int]) -> None:
        s, e = span
        d2 = _sq_dist_block(qn[s:e], qc[s:e], tn, tc, cfg)
        i1, d1, i2, d2_ = _top2_block(d2, train_ids)
        nn1_ids[s:e] = i1
        nn1_d[s:e] = d1
        nn2_ids[s:e] = i2
        nn2_d[s:e] = d2_

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, spans))
    else:
        for span in spans:
            run(span)
    return Top2Batch(nn1_ids, nn1_d, nn2_ids, nn2_d)


def top2(query: EncodedRow, train: EncodedMatrix, cfg: DistanceConfig | None = None) -> Top2Result:
    """Exact top-2 search for a single encoded row."""
    single = EncodedMatrix(
        schema=train.schema,
        numeric=query.numeric[None, :],
        categorical=query.categorical[None, :],
        row_ids=np.zeros(1, dtype=np.int64),
    )
    return top2_batch(single, train, cfg)[0]


def nearest_sq_dists(
    queries: EncodedMatrix,
    refs: EncodedMatrix,
    cfg: DistanceConfig | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Squared distance from each query to its closest reference row."""
    cfg = cfg or DistanceConfig()
    if refs.n_rows < 1:
        raise InputDataError("reference set is empty")
    qn, qc = _matrix_parts(queries, cfg)
    rn, rc = _matrix_parts(refs, cfg)
    n = queries.n_rows
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    block = _block_size(refs.n_rows, qn.shape[1] + qc.shape[1])
    spans = [(s, min(s + block, n)) for s in range(0, n, block)]

    def run(span: tuple[int, int]) -> None:
        s, e = span
        out[s:e] = _sq_dist_block(qn[s:e], qc[s:e], rn, rc, cfg).min(axis=1)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, spans))
    else:
        for span in spans:
            run(span)
    return out


def pairwise_sq_dists(a: EncodedMatrix, b: EncodedMatrix, cfg: DistanceConfig | None = None) -> np.ndarray:
    """Full squared-distance matrix; intended for small within-class scans."""
    cfg = cfg or DistanceConfig()
    an, ac = _matrix_parts(a, cfg)
    bn, bc = _matrix_parts(b, cfg)
    return _sq_dist_block(an, ac, bn, bc, cfg)
