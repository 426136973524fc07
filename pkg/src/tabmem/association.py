"""Mixed-type column association measures and correlation-based clustering.

All three measures land in [0, 1]: absolute Pearson correlation for numeric
pairs, Cramer's V for categorical pairs, and the correlation ratio for mixed
pairs.  Sums use math.fsum, which returns the correctly rounded result, so
every measure is bitwise invariant under row permutation; the trend score's
exactness guarantees rely on that.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .data import CATEGORICAL, NUMERICAL, Dataset
from .errors import InputDataError


def _fsum(values) -> float:
    return math.fsum(float(v) for v in values)


def abs_pearson(x: np.ndarray, y: np.ndarray) -> float:
    """|Pearson correlation|; 0 when either column is constant."""
    n = x.size
    mx = _fsum(x) / n
    my = _fsum(y) / n
    cov = _fsum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = _fsum((a - mx) ** 2 for a in x)
    vy = _fsum((b - my) ** 2 for b in y)
    if vx == 0.0 or vy == 0.0:
        return 0.0
    return min(1.0, abs(cov) / math.sqrt(vx * vy))


def cramers_v(x, y) -> float:
    """Cramer's V between two categorical columns; 0 when either is constant."""
    n = len(x)
    table: Counter = Counter(zip(x, y))
    row_totals: Counter = Counter(x)
    col_totals: Counter = Counter(y)
    r, c = len(row_totals), len(col_totals)
    if min(r, c) < 2:
        return 0.0
    terms = []
    for rv in sorted(row_totals):
        for cv in sorted(col_totals):
            expected = row_totals[rv] * col_totals[cv] / n
            observed = table.get((rv, cv), 0)
            terms.append((observed - expected) ** 2 / expected)
    chi2 = math.fsum(terms)
    return min(1.0, math.sqrt(chi2 / (n * (min(r, c) - 1))))


def correlation_ratio(categories, values: np.ndarray) -> float:
    """Correlation ratio eta between a categorical and a numeric column."""
    n = len(values)
    mean = _fsum(values) / n
    ss_total = _fsum((v - mean) ** 2 for v in values)
    if ss_total == 0.0:
        return 0.0
    groups: defaultdict[str, list[float]] = defaultdict(list)
    for c, v in zip(categories, values):
        groups[c].append(float(v))
    ss_between = math.fsum(
        len(vals) * (_fsum(vals) / len(vals) - mean) ** 2 for _, vals in sorted(groups.items())
    )
    return min(1.0, math.sqrt(ss_between / ss_total))


def pair_association(dataset: Dataset, a: str, b: str) -> float:
    ka, kb = dataset.schema.kind_of(a), dataset.schema.kind_of(b)
    ca, cb = dataset.columns[a], dataset.columns[b]
    if ka == NUMERICAL and kb == NUMERICAL:
        return abs_pearson(ca, cb)
    if ka == CATEGORICAL and kb == CATEGORICAL:
        return cramers_v(ca, cb)
    if ka == CATEGORICAL:
        return correlation_ratio(ca, cb)
    return correlation_ratio(cb, ca)


def association_matrix(dataset: Dataset, columns: list[str]) -> np.ndarray:
    """Symmetric association matrix over the given columns, diagonal 1."""
    k = len(columns)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            mat[i, j] = mat[j, i] = pair_association(dataset, columns[i], columns[j])
    return mat


def feature_clusters(dataset: Dataset, columns: list[str], threshold: float) -> list[list[str]]:
    """Group columns by average-linkage clustering on 1 - association.

    The dendrogram is cut at `threshold`; perfectly associated columns merge
    at dissimilarity 0 and therefore always end up together.  Clusters are
    returned ordered by their earliest column position.
    """
    if not columns:
        raise InputDataError("no columns to cluster")
    if len(columns) == 1:
        return [list(columns)]
    dissim = np.clip(1.0 - association_matrix(dataset, columns), 0.0, None)
    np.fill_diagonal(dissim, 0.0)
    links = linkage(squareform(dissim, checks=False), method="average")
    labels = fcluster(links, t=threshold, criterion="distance")
    grouped: dict[int, list[str]] = {}
    for name, lab in zip(columns, labels):
        grouped.setdefault(int(lab), []).append(name)
    order = {name: i for i, name in enumerate(columns)}
    return sorted(grouped.values(), key=lambda grp: min(order[n] for n in grp))
