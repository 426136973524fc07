"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run as `pytest tests/test_acceptance.py -v`; the criterion summaries print
directly to the terminal (bypassing capture) with the measured values.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from tabmem.audit import audit_snapshot, mean_form_mem_auc, step_integral_mem_auc
from tabmem.augment import AugmentConfig, _mixed_rows, _smote_rows, tabcutmix
from tabmem.cut import CutConfig, TagFile, improvement, prune_by_tags, score
from tabmem.data import Dataset, encode_dataset, fit_encoding, write_dataset
from tabmem.dynamics import MemAucSeries, SnapshotTrace, build_dynamics, events_from_indicators
from tabmem.neighbors import top2_batch
from tabmem.quality import c2st, dcr_score, shape_score, trend_score
from tabmem.simulate import (
    ProfileConfig,
    SimConfig,
    end_to_end,
    make_train,
    sample_clean_dataset,
)

from conftest import random_mixed_dataset
from test_neighbors import naive_top2
from test_dynamics import reference_events
from test_simulate import EPSILON_STAR, SWEEP_CFG, replica_recall


@pytest.fixture
def announce(capsys):
    def _print(line: str) -> None:
        with capsys.disabled():
            print(line, flush=True)

    return _print


def test_criterion_01_improvement_arithmetic(announce):
    start = time.perf_counter()
    values = (
        improvement(31.33, 19.35),
        improvement(31.33, 31.82),
        improvement(31.33, 26.12),
    )
    elapsed = time.perf_counter() - start
    assert abs(values[0] - 38.24) <= 0.01
    assert abs(values[1] - (-1.56)) <= 0.01
    assert abs(values[2] - 16.63) <= 0.01
    assert elapsed < 1e-3
    announce(
        f"[criterion 01] PASS improvement arithmetic {values} in {elapsed * 1e6:.0f} us"
    )


def test_criterion_02_mem_auc_identity(announce):
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        train = random_mixed_dataset(rng, 30)
        generated = random_mixed_dataset(rng, 25)
        stats = fit_encoding(train)
        snap = audit_snapshot(generated, train, stats)
        gap = abs(step_integral_mem_auc(snap.ratios) - mean_form_mem_auc(snap.ratios))
        worst = max(worst, gap)
        assert gap < 1e-12
    announce(f"[criterion 02] PASS mem-auc identity on 1000 audits, worst gap {worst:.2e}")


def test_criterion_03_nn_oracle_equivalence(announce):
    rng = np.random.default_rng(7)
    n_queries, n_train = 1000, 5000
    train = random_mixed_dataset(rng, n_train, n_numeric=4, n_categorical=2)
    queries = random_mixed_dataset(np.random.default_rng(8), n_queries, n_numeric=4, n_categorical=2)
    stats = fit_encoding(train)
    enc_train = encode_dataset(train, stats)
    enc_q = encode_dataset(queries, stats)
    # plant exact copies and duplicated training rows to exercise tie handling
    qn, qc = enc_q.numeric.copy(), enc_q.categorical.copy()
    qn[:25], qc[:25] = enc_train.numeric[:25], enc_train.categorical[:25]
    tn, tc = enc_train.numeric.copy(), enc_train.categorical.copy()
    tn[4000:4010], tc[4000:4010] = tn[:10], tc[:10]
    from tabmem.data import EncodedMatrix

    enc_train = EncodedMatrix(schema=enc_train.schema, numeric=tn, categorical=tc, row_ids=enc_train.row_ids)
    enc_q = EncodedMatrix(schema=enc_q.schema, numeric=qn, categorical=qc, row_ids=enc_q.row_ids)

    start = time.perf_counter()
    batch = top2_batch(enc_q, enc_train)
    t_num, t_cat, ids = tn.tolist(), tc.tolist(), enc_train.row_ids.tolist()
    for i in range(n_queries):
        i1, d1, i2, d2 = naive_top2(qn[i].tolist(), qc[i].tolist(), t_num, t_cat, ids)
        assert int(batch.nn1_ids[i]) == i1
        assert int(batch.nn2_ids[i]) == i2
        assert abs(float(batch.nn1_dists[i]) - d1) <= 1e-12
        assert abs(float(batch.nn2_dists[i]) - d2) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    announce(
        f"[criterion 03] PASS top2_batch == naive double loop on {n_queries}x{n_train} in {elapsed:.1f} s"
    )


def test_criterion_04_planted_leak_detection(announce):
    total, recall, attribution = replica_recall(SimConfig(replica_noise=0.0, **SWEEP_CFG))
    assert recall == 1.0
    assert attribution == 1.0
    _, recall_star, _ = replica_recall(SimConfig(replica_noise=EPSILON_STAR, **SWEEP_CFG))
    assert recall_star >= 0.99
    announce(
        f"[criterion 04] PASS noiseless recall/attribution 100% on {total} replicas; "
        f"recall {recall_star:.4f} at frozen eps*={EPSILON_STAR}"
    )


def test_criterion_05_event_algebra(announce):
    rng = np.random.default_rng(13)
    bits = rng.random((10_000, 15)) < rng.uniform(0.1, 0.6, size=(10_000, 1))
    first, forget, cum, cumf = events_from_indicators(bits)
    for i in range(bits.shape[0]):
        rf, rforget, rcum, rcumf = reference_events(bits[i].astype(int).tolist())
        assert (None if first[i] < 0 else int(first[i])) == rf
        assert np.flatnonzero(forget[i]).tolist() == rforget
        assert int(cum[i]) == rcum
        assert int(cumf[i]) == rcumf
    # the same evaluator applied to a real build_dynamics run
    train = random_mixed_dataset(rng, 20)
    snaps = tuple((e + 1, random_mixed_dataset(rng, 30)) for e in range(5))
    dyn = build_dynamics(SnapshotTrace(epochs=snaps), train, fit_encoding(train))
    for i in range(dyn.n_rows):
        rf, rforget, rcum, rcumf = reference_events(dyn.indicators[i].astype(int).tolist())
        assert (None if dyn.first_mem_pos[i] < 0 else int(dyn.first_mem_pos[i])) == rf
        assert int(dyn.cum_mem_cnt[i]) == rcum
        assert int(dyn.cum_forget_cnt[i]) == rcumf
    announce("[criterion 05] PASS event algebra exact on 10000 random sequences + built trace")


def test_criterion_06_pruning_efficacy(announce):
    start = time.perf_counter()
    ratios = []
    for seed in range(10):
        cfg = SimConfig(
            n_train=2000,
            epochs=50,
            per_epoch=600,
            leak_fraction=0.1,
            seed=seed,
            profile=ProfileConfig(spike_start=3, spike_end=8, peak=0.8, floor_frac=0.25),
        )
        report = end_to_end(cfg, CutConfig(warmup_epochs=10, prune_fraction=0.1))
        ratios.append(
            (report.mem_ratios["score_prune"], report.mem_ratios["random_prune"], report.mem_ratios["no_prune"])
        )
    elapsed = time.perf_counter() - start
    means = tuple(float(np.mean([r[i] for r in ratios])) for i in range(3))
    wins_score = sum(1 for r in ratios if r[0] < r[1])
    wins_random = sum(1 for r in ratios if r[1] < r[2])
    assert means[0] < means[1] < means[2]
    assert wins_score >= 9
    assert wins_random >= 9
    assert elapsed < 300.0
    announce(
        f"[criterion 06] PASS means score/random/none = {means[0]:.4f}/{means[1]:.4f}/{means[2]:.4f}, "
        f"paired wins {wins_score}/10 and {wins_random}/10, {elapsed:.0f} s"
    )


def test_criterion_07_pooling_ablation(announce):
    rng = np.random.default_rng(3)
    series = MemAucSeries(
        row_ids=np.arange(50, dtype=np.int64),
        mem_auc=rng.random((50, 12)),
        epoch_indices=tuple(range(1, 13)),
    )
    tables = {
        pooling: score(series, CutConfig(warmup_epochs=10, pooling=pooling))
        for pooling in ("top_k_mean", "mean", "max")
    }
    for table in tables.values():
        assert table.scores.shape == (50,)
        assert np.all(np.isfinite(table.scores))
    assert np.array_equal(tables["top_k_mean"].scores, tables["max"].scores)
    announce("[criterion 07] PASS pooling variants valid; top_k_mean(T=10) == max exactly")


def test_criterion_08_augmentation_contracts(tmp_path, announce):
    rng = np.random.default_rng(17)
    train = random_mixed_dataset(rng, 500, n_numeric=3, n_categorical=2, n_classes=3)
    n_target = 10_000
    cfg = AugmentConfig(multiplier=n_target / train.n_rows, seed=23)

    groups = [[n] for n in train.schema.non_label_columns]
    rows, prov = _mixed_rows(train, cfg, 1, groups)
    assert len(prov) == n_target
    for i, p in enumerate(prov):
        assert train.label_values[p.parent_a] == train.label_values[p.parent_b] == rows["label"][i]
        for j, name in enumerate(train.schema.non_label_columns):
            assert rows[name][i] == train.columns[name][p.parent_b if p.mask[j] else p.parent_a]

    from tabmem.association import feature_clusters

    clusters = feature_clusters(train, list(train.schema.non_label_columns), 0.5)
    rows_p, prov_p = _mixed_rows(train, cfg, 1, clusters)
    for i, p in enumerate(prov_p):
        assert train.label_values[p.parent_a] == train.label_values[p.parent_b] == rows_p["label"][i]
        for j, grp in enumerate(clusters):
            src = p.parent_b if p.mask[j] else p.parent_a
            for name in grp:
                assert rows_p[name][i] == train.columns[name][src]

    smote_cfg = AugmentConfig(method="smote", multiplier=n_target / train.n_rows, seed=29)
    rows_s, prov_s = _smote_rows(train, smote_cfg)
    for i, p in enumerate(prov_s):
        assert rows_s["label"][i] == train.label_values[p.base]
        assert p.partner in p.neighbors
        for name in ("n0", "n1", "n2"):
            lo = min(train.columns[name][p.base], train.columns[name][p.partner]) - 1e-12
            hi = max(train.columns[name][p.base], train.columns[name][p.partner]) + 1e-12
            assert lo <= rows_s[name][i] <= hi
        for name in ("c0", "c1"):
            votes: dict[str, int] = {}
            for q in p.neighbors:
                v = train.columns[name][q]
                votes[v] = votes.get(v, 0) + 1
            best = max(votes.values())
            winners = [v for v, c in votes.items() if c == best]
            expected = winners[0] if len(winners) == 1 else train.columns[name][p.base]
            assert rows_s[name][i] == expected

    one = tmp_path / "one.csv"
    two = tmp_path / "two.csv"
    write_dataset(tabcutmix(train, cfg), one)
    write_dataset(tabcutmix(train, cfg), two)
    assert one.read_bytes() == two.read_bytes()
    announce(
        f"[criterion 08] PASS {n_target} mixed + {n_target} clustered + {n_target} interpolated rows "
        "pass membership/majority checks; reruns byte-identical"
    )


def test_criterion_09_quality_calibration(announce):
    cfg = SimConfig(n_train=2500, seed=21)
    train, _ = make_train(cfg)
    shape, _ = shape_score(train, train)
    trend, _ = trend_score(train, train)
    assert shape == 1.0 and trend == 1.0

    perm = np.random.default_rng(0).permutation(train.n_rows)
    half_a = train.take(np.sort(perm[:1000]))
    half_b = train.take(np.sort(perm[1000:2000]))
    split_half = c2st(half_a, half_b, seed=0)
    assert split_half >= 0.9

    stats = fit_encoding(half_a)
    cols = dict(half_b.columns)
    cols["num0"] = half_b.columns["num0"] + 100.0 * stats.stds["num0"]
    shifted = Dataset(schema=half_b.schema, columns=cols, row_ids=half_b.row_ids)
    shifted_score = c2st(half_a, shifted, seed=0)
    assert shifted_score <= 0.05

    sim = SimConfig(n_train=500, seed=8)
    tr_small, ho_small = make_train(sim)
    assert dcr_score(tr_small.take(np.arange(100)), tr_small, ho_small) <= 0.01
    assert dcr_score(ho_small.take(np.arange(60)), tr_small, ho_small) >= 0.99

    big = SimConfig(n_train=12500, seed=33)
    synth = sample_clean_dataset(big, 5000, stream=1)
    tr = sample_clean_dataset(big, 5000, stream=2)
    ho = sample_clean_dataset(big, 5000, stream=3)
    balance = dcr_score(synth, tr, ho)
    assert abs(balance - 0.5) <= 0.05
    announce(
        f"[criterion 09] PASS shape/trend self = 1.0; c2st split-half {split_half:.3f}, "
        f"shifted {shifted_score:.3f}; dcr copies 0/1, iid balance {balance:.4f}"
    )


def _run_cli(*argv, cwd):
    env = dict(os.environ)
    env["PYTHONPATH"] = str(Path(__file__).resolve().parent.parent / "src") + os.pathsep + env.get(
        "PYTHONPATH", ""
    )
    return subprocess.run(
        [sys.executable, "-m", "tabmem", *argv], cwd=cwd, env=env, capture_output=True, text=True
    )


def test_criterion_10_transferability(tmp_path, announce):
    # library level: a tag file from pipeline A prunes dataset B exactly
    rng = np.random.default_rng(5)
    dataset_b = random_mixed_dataset(rng, 200)
    tags = TagFile(source="pipeline_a", fraction=0.1, ids=tuple(range(0, 200, 10)))
    filtered = prune_by_tags(dataset_b, tags)
    assert set(int(i) for i in dataset_b.row_ids) - set(int(i) for i in filtered.row_ids) == set(tags.ids)

    # CLI recipe: simulate -> dynamics -> cut --tags-from -> simulate on filtered
    sim_args = [
        "simulate", "--n-train", "150", "--epochs", "4", "--per-epoch", "80",
        "--seed", "5", "--spike-start", "2", "--spike-end", "3",
    ]
    outputs = []
    for attempt in ("first", "second"):
        base = tmp_path / attempt
        base.mkdir()
        steps = [
            sim_args + ["--out-dir", "sim"],
            [
                "dynamics", "--train", "sim/train.csv", "--snapshots", "sim/snapshots",
                "--schema", "sim/schema.json", "--out-dir", "dyn",
            ],
            [
                "cut", "--train", "sim/train.csv", "--schema", "sim/schema.json",
                "--tags-from", "dyn/derived_tags.json", "--out-dir", "cut",
            ],
            sim_args + [
                "--out-dir", "resim", "--reuse-train", "sim/train.csv",
                "--drop-tags", "cut/removed_tags.json", "--truth", "sim/truth.json",
            ],
        ]
        for step in steps:
            proc = _run_cli(*step, cwd=base)
            assert proc.returncode == 0, f"{step[0]} failed: {proc.stderr}"
        tagged = set(json.loads((base / "cut/removed_tags.json").read_text())["ids"])
        filtered_rows = (base / "cut/filtered_train.csv").read_text().splitlines()
        assert len(filtered_rows) == 1 + 120 - len(tagged)
        outputs.append(
            tuple(
                (base / rel).read_bytes()
                for rel in ("resim/train.csv", "resim/truth.json", "resim/snapshots/epoch_0004.csv")
            )
        )
    assert outputs[0] == outputs[1]
    announce("[criterion 10] PASS tag transfer removes exact ids; CLI recipe exit 0, reruns byte-identical")
