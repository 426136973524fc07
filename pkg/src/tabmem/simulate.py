"""Controllable leaky generator: plants ground-truth memorization at desk scale.

The simulator draws i.i.d. clean rows from a seeded mixed-type sampler
(two-component Gaussian mixtures per numeric column, Dirichlet-drawn category
frequencies, labels Bernoulli on a linear score so downstream utility is
learnable).  A designated high-risk subset of training rows leaks: each
generated row is, with an epoch- and row-dependent probability, a noisy
replica of a uniformly chosen high-risk row, otherwise a fresh clean draw.
Per-row leak intensities are heterogeneous, which reproduces the long-tailed
attribution counts seen in real pipelines.

Replica noise is applied in standardized units (scaled by each column's
analytic marginal standard deviation), so the noise level means the same
thing for any schema.  Every epoch consumes fixed-layout draws from its own
substream keyed on (seed, stream, epoch): decisions, clean rows, and replica
noise come from separate children.  Re-simulating with a pruned training set
therefore replays identical clean rows, and replicas whose source row was
removed simply fall back to their clean draw.  That makes pruning
experiments paired at the row level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audit import AuditConfig, audit_snapshot
from .cut import CutConfig, TagFile, improvement, prune, remove_random, score
from .data import CATEGORICAL, NUMERICAL, Column, Dataset, TableSchema, fit_encoding
from .dynamics import SnapshotTrace, build_dynamics
from .errors import ConfigError, InputDataError

_STREAM_DATA = 11
_STREAM_RISK = 12
_STREAM_EMIT = 13

# Offset applied to the base seed for the random-removal control arm.
_RANDOM_PRUNE_SEED_OFFSET = 7919

HOLDOUT_FRACTION = 0.2

PROFILES = ("early_spike", "gradual")


@dataclass(frozen=True)
class ProfileConfig:
    """Shape of the replica-emission probability over epochs."""

    kind: str = "early_spike"
    peak: float = 0.8
    spike_start: int = 3
    spike_end: int = 8
    floor_frac: float = 0.25
    decay_epochs: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in PROFILES:
            raise ConfigError(f"profile kind must be one of {PROFILES}")
        if not (0.0 <= self.peak <= 1.0):
            raise ConfigError("profile peak must lie in [0, 1]")
        if not (1 <= self.spike_start <= self.spike_end):
            raise ConfigError("spike window must satisfy 1 <= start <= end")
        if not (0.0 <= self.floor_frac <= 1.0):
            raise ConfigError("floor_frac must lie in [0, 1]")
        if self.decay_epochs <= 0:
            raise ConfigError("decay_epochs must be positive")

    def value_at(self, epoch: int, total_epochs: int) -> float:
        if self.kind == "gradual":
            return self.peak * epoch / total_epochs
        floor = self.floor_frac * self.peak
        if epoch < self.spike_start:
            return floor
        if epoch <= self.spike_end:
            return self.peak
        return max(floor, self.peak * math.exp(-(epoch - self.spike_end) / self.decay_epochs))


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; `n_train` is the total row budget before the
    20 percent holdout carve."""

    n_train: int = 1000
    n_numeric: int = 4
    cat_cardinalities: tuple[int, ...] = (3, 4)
    leak_fraction: float = 0.1
    replica_noise: float = 0.05
    cat_flip: float = 0.02
    epochs: int = 20
    per_epoch: int | None = None
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_train < 5:
            raise ConfigError("n_train must be at least 5")
        if self.n_numeric < 0 or (self.n_numeric == 0 and not self.cat_cardinalities):
            raise ConfigError("need at least one feature column")
        if any(k < 2 for k in self.cat_cardinalities):
            raise ConfigError("categorical cardinalities must be at least 2")
        if not (0.0 <= self.leak_fraction < 1.0):
            raise ConfigError("leak_fraction must lie in [0, 1)")
        if self.replica_noise < 0:
            raise ConfigError("replica_noise must be non-negative")
        if not (0.0 <= self.cat_flip <= 1.0):
            raise ConfigError("cat_flip must lie in [0, 1]")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.per_epoch is not None and self.per_epoch < 1:
            raise ConfigError("per_epoch must be positive")


def schema_for(cfg: SimConfig) -> TableSchema:
    columns = [Column(f"num{j}", NUMERICAL) for j in range(cfg.n_numeric)]
    columns += [Column(f"cat{c}", CATEGORICAL) for c in range(len(cfg.cat_cardinalities))]
    columns.append(Column("label", CATEGORICAL))
    return TableSchema(columns=tuple(columns), label_column="label")


@dataclass(frozen=True)
class _SamplerParams:
    mix_weight: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray
    marginal_mean: np.ndarray
    marginal_std: np.ndarray
    cat_probs: tuple[np.ndarray, ...]
    beta_num: np.ndarray
    beta_cat: tuple[np.ndarray, ...]


def _sampler_params(cfg: SimConfig) -> _SamplerParams:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_DATA, 0]))
    k = cfg.n_numeric
    means = rng.normal(0.0, 2.0, size=(k, 2))
    sigmas = rng.uniform(0.5, 1.5, size=(k, 2))
    mix_weight = rng.uniform(0.3, 0.7, size=k)
    cat_probs = tuple(rng.dirichlet(np.ones(card)) for card in cfg.cat_cardinalities)
    beta_num = rng.normal(0.0, 1.0, size=k)
    beta_cat = tuple(rng.normal(0.0, 0.5, size=card) for card in cfg.cat_cardinalities)
    m = mix_weight * means[:, 0] + (1 - mix_weight) * means[:, 1]
    second = mix_weight * (sigmas[:, 0] ** 2 + means[:, 0] ** 2) + (1 - mix_weight) * (
        sigmas[:, 1] ** 2 + means[:, 1] ** 2
    )
    var = np.maximum(second - m**2, 1e-12)
    return _SamplerParams(
        mix_weight=mix_weight,
        means=means,
        sigmas=sigmas,
        marginal_mean=m,
        marginal_std=np.sqrt(var),
        cat_probs=cat_probs,
        beta_num=beta_num,
        beta_cat=beta_cat,
    )


def _sample_clean(rng: np.random.Generator, n: int, cfg: SimConfig, params: _SamplerParams) -> dict[str, np.ndarray]:
    """Draw n clean rows; the draw layout is fixed so streams stay aligned."""
    columns: dict[str, np.ndarray] = {}
    logits = np.zeros(n)
    for j in range(cfg.n_numeric):
        comp = rng.random(n) < params.mix_weight[j]
        z = rng.standard_normal(n)
        vals = np.where(
            comp,
            params.means[j, 0] + params.sigmas[j, 0] * z,
            params.means[j, 1] + params.sigmas[j, 1] * z,
        )
        columns[f"num{j}"] = vals
        logits += params.beta_num[j] * (vals - params.marginal_mean[j]) / params.marginal_std[j]
    for c, probs in enumerate(params.cat_probs):
        u = rng.random(n)
        idx = np.minimum(np.searchsorted(np.cumsum(probs), u, side="right"), probs.size - 1)
        columns[f"cat{c}"] = np.array([f"v{i}" for i in idx], dtype=object)
        logits += params.beta_cat[c][idx]
    p = 1.0 / (1.0 + np.exp(-logits))
    labels = rng.random(n) < p
    columns["label"] = np.array(["1" if v else "0" for v in labels], dtype=object)
    return columns


def sample_clean_dataset(cfg: SimConfig, n: int, stream: int = 0) -> Dataset:
    """Fresh i.i.d. rows from the clean sampler on a named substream."""
    params = _sampler_params(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_DATA, 1, stream]))
    columns = _sample_clean(rng, n, cfg, params)
    return Dataset(schema=schema_for(cfg), columns=columns, row_ids=np.arange(n, dtype=np.int64))


def make_train(cfg: SimConfig) -> tuple[Dataset, Dataset]:
    """Training and holdout datasets; the last 20 percent becomes holdout."""
    params = _sampler_params(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_DATA, 2]))
    columns = _sample_clean(rng, cfg.n_train, cfg, params)
    n_hold = int(round(HOLDOUT_FRACTION * cfg.n_train))
    n_train = cfg.n_train - n_hold
    schema = schema_for(cfg)
    train = Dataset(
        schema=schema,
        columns={k: v[:n_train] for k, v in columns.items()},
        row_ids=np.arange(n_train, dtype=np.int64),
    )
    holdout = Dataset(
        schema=schema,
        columns={k: v[n_train:] for k, v in columns.items()},
        row_ids=np.arange(n_hold, dtype=np.int64),
    )
    return train, holdout


@dataclass
class GroundTruth:
    """Which rows leak, how strongly, and the per-epoch emission log."""

    high_risk_ids: np.ndarray
    weights: dict[int, float]
    emissions: dict[int, dict[int, int]] = field(default_factory=dict)

    def with_empty_log(self) -> "GroundTruth":
        return GroundTruth(high_risk_ids=self.high_risk_ids, weights=dict(self.weights))

    def replicas_at(self, epoch: int) -> dict[int, int]:
        return self.emissions.get(epoch, {})

    def to_json_dict(self) -> dict:
        return {
            "high_risk_ids": [int(i) for i in self.high_risk_ids],
            "weights": {str(i): float(w) for i, w in sorted(self.weights.items())},
            "emissions": {
                str(e): {str(g): int(s) for g, s in sorted(log.items())}
                for e, log in sorted(self.emissions.items())
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GroundTruth":
        extra = set(obj) - {"high_risk_ids", "weights", "emissions"}
        if extra:
            raise InputDataError(f"truth file has unknown keys: {sorted(extra)}")
        return cls(
            high_risk_ids=np.asarray(sorted(int(i) for i in obj["high_risk_ids"]), dtype=np.int64),
            weights={int(k): float(v) for k, v in obj["weights"].items()},
            emissions={
                int(e): {int(g): int(s) for g, s in log.items()} for e, log in obj["emissions"].items()
            },
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        path = Path(path)
        if not path.exists():
            raise InputDataError(f"truth file not found: {path}")
        return cls.from_json_dict(json.loads(path.read_text(encoding="utf-8")))


def designate_ground_truth(train: Dataset, cfg: SimConfig) -> GroundTruth:
    """Pick the high-risk subset and its heterogeneous leak intensities."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_RISK]))
    k = math.ceil(cfg.leak_fraction * train.n_rows) if cfg.leak_fraction > 0 else 0
    if k == 0:
        return GroundTruth(high_risk_ids=np.empty(0, dtype=np.int64), weights={})
    ids = np.sort(rng.choice(train.row_ids, size=k, replace=False))
    # Squared uniforms skew intensities low, giving the long-tailed counts.
    raw = rng.uniform(0.2, 1.0, size=k) ** 2
    weights = {int(i): float(w) for i, w in zip(ids, raw)}
    return GroundTruth(high_risk_ids=ids, weights=weights)


def emit_epoch(
    train: Dataset,
    truth: GroundTruth,
    epoch: int,
    cfg: SimConfig,
    n_rows: int | None = None,
) -> Dataset:
    """Generate one snapshot; replicas of rows missing from `train` fall back
    to their clean draw, so pruning visibly removes leakage."""
    if not (1 <= epoch <= cfg.epochs):
        raise InputDataError(f"epoch {epoch} out of range [1, {cfg.epochs}]")
    params = _sampler_params(cfg)
    n = n_rows if n_rows is not None else (cfg.per_epoch or train.n_rows)
    parent = np.random.SeedSequence([cfg.seed, _STREAM_EMIT, epoch])
    dec_ss, clean_ss, rep_ss = parent.spawn(3)
    clean = _sample_clean(np.random.default_rng(clean_ss), n, cfg, params)

    columns = {k: np.array(v, dtype=object if v.dtype == object else np.float64) for k, v in clean.items()}
    log: dict[int, int] = {}
    if truth.high_risk_ids.size:
        dec = np.random.default_rng(dec_ss)
        rep = np.random.default_rng(rep_ss)
        cand = truth.high_risk_ids[dec.integers(0, truth.high_risk_ids.size, size=n)]
        u = dec.random(n)
        pi = cfg.profile.value_at(epoch, cfg.epochs) * np.array([truth.weights[int(i)] for i in cand])
        attempt = u < pi
        available = np.isin(cand, train.row_ids)
        is_replica = attempt & available
        # Fixed-layout noise draws, consumed whether or not a row replicates.
        z = rep.standard_normal((n, cfg.n_numeric))
        n_cat = len(cfg.cat_cardinalities) + 1
        flip_u = rep.random((n, n_cat))
        resample_u = rep.random((n, n_cat))
        if is_replica.any():
            id_to_pos = train.id_to_position()
            rows = np.flatnonzero(is_replica)
            src_pos = np.array([id_to_pos[int(cand[i])] for i in rows], dtype=np.int64)
            for j in range(cfg.n_numeric):
                name = f"num{j}"
                noisy = train.columns[name][src_pos] + cfg.replica_noise * params.marginal_std[j] * z[rows, j]
                columns[name][rows] = noisy
            cat_names = [f"cat{c}" for c in range(len(cfg.cat_cardinalities))] + ["label"]
            for cj, name in enumerate(cat_names):
                source_vals = train.columns[name][src_pos]
                flips = flip_u[rows, cj] < cfg.cat_flip
                if name == "label":
                    resampled = np.where(resample_u[rows, cj] < 0.5, "0", "1").astype(object)
                else:
                    probs = params.cat_probs[cj]
                    idx = np.minimum(
                        np.searchsorted(np.cumsum(probs), resample_u[rows, cj], side="right"),
                        probs.size - 1,
                    )
                    resampled = np.array([f"v{i}" for i in idx], dtype=object)
                columns[name][rows] = np.where(flips, resampled, source_vals)
            log = {int(i): int(cand[i]) for i in rows}
    truth.emissions[epoch] = log
    return Dataset(schema=schema_for(cfg), columns=columns, row_ids=np.arange(n, dtype=np.int64))


def run_trace(train: Dataset, truth: GroundTruth, cfg: SimConfig, n_rows: int | None = None) -> SnapshotTrace:
    epochs = tuple(
        (e, emit_epoch(train, truth, e, cfg, n_rows=n_rows)) for e in range(1, cfg.epochs + 1)
    )
    return SnapshotTrace(epochs=epochs)


@dataclass(frozen=True)
class EndToEndReport:
    """Paired comparison of score-based, random, and no pruning."""

    n_train: int
    n_high_risk: int
    n_removed: int
    prune_precision: float
    prune_recall: float
    mem_ratios: dict[str, float]
    improvements: dict[str, float]
    removed: TagFile

    def to_json_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_high_risk": self.n_high_risk,
            "n_removed": self.n_removed,
            "prune_precision": self.prune_precision,
            "prune_recall": self.prune_recall,
            "mem_ratios": dict(sorted(self.mem_ratios.items())),
            "improvements": dict(sorted(self.improvements.items())),
        }


def end_to_end(cfg: SimConfig, cut_cfg: CutConfig, audit_cfg: AuditConfig | None = None, threads: int = 1) -> EndToEndReport:
    """Full pipeline: trace, score, prune three ways, re-simulate, re-audit.

    Snapshots are independent across epochs given the config, so each variant
    only regenerates the final epoch to measure its post-intervention
    memorization ratio.
    """
    audit_cfg = audit_cfg or AuditConfig()
    train, _holdout = make_train(cfg)
    truth = designate_ground_truth(train, cfg)
    n_per_epoch = cfg.per_epoch or train.n_rows

    trace = run_trace(train, truth, cfg, n_rows=n_per_epoch)
    stats = fit_encoding(train)
    dyn = build_dynamics(trace, train, stats, audit_cfg, threads=threads)
    table = score(dyn, cut_cfg)
    pruned_by_score, removed = prune(train, table, cut_cfg.prune_fraction)
    pruned_random = remove_random(train, cut_cfg.prune_fraction, seed=cfg.seed + _RANDOM_PRUNE_SEED_OFFSET)

    mem_ratios: dict[str, float] = {}
    for name, variant in (
        ("score_prune", pruned_by_score),
        ("random_prune", pruned_random),
        ("no_prune", train),
    ):
        vtruth = truth.with_empty_log()
        final_snapshot = emit_epoch(variant, vtruth, cfg.epochs, cfg, n_rows=n_per_epoch)
        vstats = fit_encoding(variant)
        mem_ratios[name] = audit_snapshot(final_snapshot, variant, vstats, audit_cfg, threads=threads).mem_ratio

    high_risk = set(int(i) for i in truth.high_risk_ids)
    removed_set = set(removed.ids)
    overlap = len(high_risk & removed_set)
    base = mem_ratios["no_prune"]
    improvements = {
        name: improvement(base, ratio) if base > 0 else 0.0
        for name, ratio in mem_ratios.items()
        if name != "no_prune"
    }
    return EndToEndReport(
        n_train=train.n_rows,
        n_high_risk=len(high_risk),
        n_removed=len(removed_set),
        prune_precision=overlap / len(removed_set) if removed_set else 0.0,
        prune_recall=overlap / len(high_risk) if high_risk else 0.0,
        mem_ratios=mem_ratios,
        improvements=improvements,
        removed=removed,
    )
