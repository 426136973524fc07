from __future__ import annotations

import numpy as np
import pytest

from tabmem.association import (
    abs_pearson,
    correlation_ratio,
    cramers_v,
    feature_clusters,
    pair_association,
)

from conftest import make_dataset, random_mixed_dataset


class TestMeasures:
    def test_pearson_perfect_and_constant(self, rng):
        x = rng.normal(size=50)
        assert abs_pearson(x, 2.0 * x) == pytest.approx(1.0, abs=1e-12)
        assert abs_pearson(x, -x) == pytest.approx(1.0, abs=1e-12)
        assert abs_pearson(x, np.full(50, 3.0)) == 0.0

    def test_pearson_permutation_invariant_bitwise(self, rng):
        x = rng.normal(size=40)
        y = x + rng.normal(size=40)
        perm = rng.permutation(40)
        assert abs_pearson(x, y) == abs_pearson(x[perm], y[perm])

    def test_cramers_v_identical_and_independent(self):
        x = ["a", "a", "b", "b"] * 10
        y = ["p", "p", "q", "q"] * 10
        assert cramers_v(x, y) == pytest.approx(1.0, abs=1e-12)
        z = ["p", "q", "p", "q"] * 10
        assert cramers_v(x, z) == pytest.approx(0.0, abs=1e-12)
        assert cramers_v(x, ["p"] * 40) == 0.0

    def test_correlation_ratio_bounds(self, rng):
        cats = np.array(["a"] * 30 + ["b"] * 30)
        values = np.concatenate([rng.normal(0, 1, 30), rng.normal(5, 1, 30)])
        high = correlation_ratio(cats, values)
        assert 0.8 < high <= 1.0
        assert correlation_ratio(cats, np.full(60, 1.0)) == 0.0

    def test_dispatch_by_kind(self, rng):
        ds = random_mixed_dataset(rng, 60)
        assert 0.0 <= pair_association(ds, "n0", "n1") <= 1.0
        assert 0.0 <= pair_association(ds, "c0", "c1") <= 1.0
        assert pair_association(ds, "n0", "c0") == pair_association(ds, "c0", "n0")


class TestClustering:
    def test_perfectly_correlated_columns_merge(self, rng):
        x = rng.normal(size=80)
        ds = make_dataset(
            numeric={"a": list(x), "b": list(2.0 * x), "c": list(rng.normal(size=80))},
            labels=["l"] * 80,
        )
        clusters = feature_clusters(ds, ["a", "b", "c"], threshold=0.5)
        by_member = {name: i for i, grp in enumerate(clusters) for name in grp}
        assert by_member["a"] == by_member["b"]

    def test_tiny_threshold_gives_singletons(self, rng):
        ds = random_mixed_dataset(rng, 60)
        cols = list(ds.schema.non_label_columns)
        clusters = feature_clusters(ds, cols, threshold=1e-12)
        assert clusters == [[c] for c in cols]

    def test_single_column(self, rng):
        ds = random_mixed_dataset(rng, 20)
        assert feature_clusters(ds, ["n0"], threshold=0.5) == [["n0"]]

    def test_cluster_order_by_first_position(self, rng):
        ds = random_mixed_dataset(rng, 60)
        cols = list(ds.schema.non_label_columns)
        clusters = feature_clusters(ds, cols, threshold=1e-12)
        firsts = [cols.index(grp[0]) for grp in clusters]
        assert firsts == sorted(firsts)
