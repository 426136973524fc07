"""Synthetic-data quality and privacy metrics.

Five scores, all in [0, 1]:

  * shape: per-column distribution match, 1 - KS statistic for numeric
    columns and 1 - total variation distance for categorical ones, averaged;
  * trend: per-pair association match, 1 - |assoc_real - assoc_synth| using
    the mixed-type measures from `association`, averaged over unordered
    column pairs (label excluded by default);
  * c2st: a two-sample probe; a fixed linear logistic recipe tries to tell
    real from synthetic under 5-fold cross-validation, and the pooled
    out-of-fold AUC maps through 1 - 2*max(AUC - 0.5, 0) so 1 means
    indistinguishable;
  * dcr: the fraction of synthetic rows closer to the holdout set than to
    the training set (exact ties count one half); about 0.5 means no excess
    closeness to training data;
  * mle: ROC-AUC on real test data of the same frozen logistic recipe
    trained on synthetic rows.

The probe classifier is deliberately small and frozen (full-batch gradient
descent, 500 steps, step size 0.1, no regularization, zero init) so that
scores are deterministic and comparable across runs rather than tuned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .association import pair_association
from .data import CATEGORICAL, Dataset, EncodingStats, encode_dataset, fit_encoding
from .errors import InputDataError
from .neighbors import DistanceConfig, nearest_sq_dists

GD_STEPS = 500
GD_STEP_SIZE = 0.1
C2ST_FOLDS = 5
C2ST_MIN_ROWS = 20


@dataclass(frozen=True)
class QualityReport:
    shape: float | None = None
    trend: float | None = None
    c2st: float | None = None
    dcr: float | None = None
    mle: float | None = None
    mem_ratio: float | None = None
    shape_per_column: dict[str, float] | None = None
    trend_per_pair: dict[str, float] | None = None

    def to_json_dict(self) -> dict:
        return {
            "mem_ratio": self.mem_ratio,
            "mle": self.mle,
            "shape": self.shape,
            "trend": self.trend,
            "c2st": self.c2st,
            "dcr": self.dcr,
        }


def _check_same_schema(real: Dataset, synth: Dataset) -> None:
    if real.schema != synth.schema:
        raise InputDataError("schema mismatch between real and synthetic datasets")
    if real.n_rows == 0 or synth.n_rows == 0:
        raise InputDataError("empty dataset")


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact over observed points."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / a.size
    cdf_b = np.searchsorted(b, points, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def total_variation(a, b) -> float:
    """Total variation distance between two categorical frequency vectors."""
    na, nb = len(a), len(b)
    counts_a: dict[str, int] = {}
    counts_b: dict[str, int] = {}
    for v in a:
        counts_a[v] = counts_a.get(v, 0) + 1
    for v in b:
        counts_b[v] = counts_b.get(v, 0) + 1
    support = sorted(set(counts_a) | set(counts_b))
    return 0.5 * math.fsum(abs(counts_a.get(v, 0) / na - counts_b.get(v, 0) / nb) for v in support)


def shape_score(real: Dataset, synth: Dataset) -> tuple[float, dict[str, float]]:
    """Column-wise distribution similarity; headline is the column mean."""
    _check_same_schema(real, synth)
    per_column: dict[str, float] = {}
    for name in real.schema.names:
        if real.schema.kind_of(name) == CATEGORICAL:
            per_column[name] = 1.0 - total_variation(real.columns[name], synth.columns[name])
        else:
            per_column[name] = 1.0 - ks_statistic(real.columns[name], synth.columns[name])
    headline = math.fsum(per_column.values()) / len(per_column)
    return headline, per_column


def trend_score(
    real: Dataset, synth: Dataset, include_label: bool = False
) -> tuple[float, dict[str, float]]:
    """Pairwise association similarity; headline is the pair mean."""
    _check_same_schema(real, synth)
    columns = list(real.schema.names if include_label else real.schema.non_label_columns)
    if len(columns) < 2:
        raise InputDataError("trend score needs at least two columns")
    per_pair: dict[str, float] = {}
    for i in range(len(columns)):
        for j in range(i + 1, len(columns)):
            a, b = columns[i], columns[j]
            diff = abs(pair_association(real, a, b) - pair_association(synth, a, b))
            per_pair[f"{a}|{b}"] = 1.0 - diff
    headline = math.fsum(per_pair.values()) / len(per_pair)
    return headline, per_pair


def _design_matrix(dataset: Dataset, stats: EncodingStats) -> np.ndarray:
    """Standardized numerics plus one-hot categoricals (unseen slot included)."""
    enc = encode_dataset(dataset, stats)
    blocks = [enc.numeric]
    for j, name in enumerate(stats.schema.categorical_columns):
        width = stats.unseen_index(name) + 1
        onehot = np.zeros((dataset.n_rows, width))
        onehot[np.arange(dataset.n_rows), enc.categorical[:, j]] = 1.0
        blocks.append(onehot)
    return np.hstack(blocks)


def _design_matrix_without_label(dataset: Dataset, stats: EncodingStats) -> np.ndarray:
    enc = encode_dataset(dataset, stats)
    blocks = [enc.numeric]
    for j, name in enumerate(stats.schema.categorical_columns):
        if name == stats.schema.label_column:
            continue
        width = stats.unseen_index(name) + 1
        onehot = np.zeros((dataset.n_rows, width))
        onehot[np.arange(dataset.n_rows), enc.categorical[:, j]] = 1.0
        blocks.append(onehot)
    return np.hstack(blocks)


def _fit_logistic(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Frozen recipe: full-batch GD, 500 steps, lr 0.1, zero init, no penalty."""
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(GD_STEPS):
        p = expit(x @ w + b)
        err = p - y
        w -= GD_STEP_SIZE * (x.T @ err) / n
        b -= GD_STEP_SIZE * float(err.mean())
    return w, b


def _auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based ROC-AUC with average ranks on ties."""
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputDataError("AUC undefined: single-class input")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _stratified_folds(labels: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    folds = np.empty(labels.size, dtype=np.int64)
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        folds[members] = np.arange(members.size) % n_folds
    return folds


def c2st(real: Dataset, synth: Dataset, seed: int = 0) -> float:
    """Classifier two-sample test score; 1 means indistinguishable."""
    _check_same_schema(real, synth)
    if real.n_rows < C2ST_MIN_ROWS or synth.n_rows < C2ST_MIN_ROWS:
        raise InputDataError(f"c2st needs at least {C2ST_MIN_ROWS} rows on each side")
    rng = np.random.default_rng(seed)
    m = min(real.n_rows, synth.n_rows)
    real_take = np.sort(rng.choice(real.n_rows, size=m, replace=False))
    synth_take = np.sort(rng.choice(synth.n_rows, size=m, replace=False))
    stats = fit_encoding(real)
    x = np.vstack(
        [_design_matrix(real.take(real_take), stats), _design_matrix(synth.take(synth_take), stats)]
    )
    y = np.concatenate([np.ones(m), np.zeros(m)])
    folds = _stratified_folds(y, C2ST_FOLDS, rng)
    scores = np.empty(y.size)
    for f in range(C2ST_FOLDS):
        held = folds == f
        w, b = _fit_logistic(x[~held], y[~held])
        scores[held] = x[held] @ w + b
    auc = _auc(scores, y)
    return 1.0 - 2.0 * max(auc - 0.5, 0.0)


def dcr_score(
    synth: Dataset, train: Dataset, holdout: Dataset, stats: EncodingStats | None = None
) -> float:
    """Distance-to-closest-record balance between training and holdout sets.

    The encoding is fit on `train` unless shared statistics are passed; a
    shared encoding makes the score exactly complementary under swapping the
    train and holdout roles.
    """
    _check_same_schema(synth, train)
    _check_same_schema(synth, holdout)
    stats = stats if stats is not None else fit_encoding(train)
    cfg = DistanceConfig()
    synth_enc = encode_dataset(synth, stats)
    d_train = nearest_sq_dists(synth_enc, encode_dataset(train, stats), cfg)
    d_hold = nearest_sq_dists(synth_enc, encode_dataset(holdout, stats), cfg)
    wins = d_hold < d_train
    ties = d_hold == d_train
    return float((wins.sum() + 0.5 * ties.sum()) / synth.n_rows)


def mle_auc(synth_train: Dataset, real_test: Dataset, seed: int = 0) -> float:
    """Downstream utility: train the frozen probe on synthetic, test on real.

    The label must be binary; the positive class is the second vocabulary
    entry of the synthetic training labels.  The recipe has no random
    component; `seed` is accepted for interface uniformity.
    """
    _check_same_schema(synth_train, real_test)
    stats = fit_encoding(synth_train)
    label = synth_train.schema.label_column
    vocab = stats.vocabularies[label]
    if len(vocab) != 2:
        raise InputDataError(f"mle needs a binary label, found {len(vocab)} classes in synthetic data")
    index = stats.vocabulary_index(label)
    y_train = np.array([index[v] for v in synth_train.label_values], dtype=np.float64)
    unknown = [v for v in real_test.label_values if v not in index]
    if unknown:
        raise InputDataError(f"test labels outside synthetic label vocabulary: {sorted(set(unknown))[:5]}")
    y_test = np.array([index[v] for v in real_test.label_values], dtype=np.float64)
    if len(set(y_test)) < 2:
        raise InputDataError("single-class test set")
    x_train = _design_matrix_without_label(synth_train, stats)
    x_test = _design_matrix_without_label(real_test, stats)
    w, b = _fit_logistic(x_train, y_train)
    return _auc(x_test @ w + b, y_test.astype(np.int64))
