"""Mixing-based augmentation baselines and the prune-then-mix pipeline.

All three generators conserve the class label and append their output with
fresh row ids above the input range, so augmented rows can never be mistaken
for real records by attribution.  Every output row draws from its own random
substream keyed on (seed, method, output index); generation order and any
future parallelism therefore cannot change results, and a fixed seed
reproduces the augmented dataset byte for byte.

Feature-mixing (per-feature masks, or per-cluster masks grouping correlated
features) samples the replacement ratio lambda uniformly and swaps feature
values between two distinct same-class parents.  The interpolation sampler
follows the mixed-type convention: numeric values move a uniform fraction of
the way toward a same-class nearest neighbor in encoded space, categorical
values take the majority vote of the k neighbors with ties falling back to
the base row's value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .association import feature_clusters
from .cut import ScoreTable, prune
from .data import CATEGORICAL, Dataset, EncodedMatrix, encode_dataset, fit_encoding
from .errors import ConfigError, InputDataError
from .neighbors import DistanceConfig, pairwise_sq_dists

METHODS = ("smote", "tabcutmix", "tabcutmixplus")

# Substream tags keep generator random streams disjoint.  Both mixing
# variants share one stream: with identical parent and lambda draws, the
# clustered variant with singleton clusters reproduces the plain one bit for
# bit, and paired runs isolate the effect of the cluster structure.
_STREAM_MIX = 1
_STREAM_SMOTE = 3


class SkippedClassWarning(UserWarning):
    """Some classes were too small to augment and contributed no parents."""


@dataclass(frozen=True)
class AugmentConfig:
    method: str = "tabcutmix"
    multiplier: float = 1.0
    smote_k: int = 5
    cluster_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.multiplier <= 0:
            raise ConfigError("multiplier must be positive")
        if self.smote_k < 1:
            raise ConfigError("smote_k must be at least 1")
        if not (0.0 < self.cluster_threshold < 1.0):
            raise ConfigError("cluster_threshold must lie in (0, 1)")


def _n_new(multiplier: float, n: int) -> int:
    return math.ceil(multiplier * n)


def _eligible_positions(train: Dataset, min_size: int, context: str) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    by_class = train.positions_by_class()
    skipped = sorted(label for label, pos in by_class.items() if pos.size < min_size)
    if skipped:
        warnings.warn(
            f"{context}: classes with fewer than {min_size} rows were skipped: {skipped}",
            SkippedClassWarning,
            stacklevel=3,
        )
    eligible = {label: pos for label, pos in by_class.items() if pos.size >= min_size}
    if not eligible:
        raise InputDataError(f"{context}: no class has at least {min_size} rows")
    flat = np.sort(np.concatenate(list(eligible.values())))
    return flat, eligible


def _append_rows(train: Dataset, new_columns: dict[str, list], first_new_id: int | None) -> Dataset:
    n_new = len(next(iter(new_columns.values())))
    start = int(train.row_ids.max()) + 1 if first_new_id is None else int(first_new_id)
    columns = {}
    for name in train.schema.names:
        old = train.columns[name]
        if train.schema.kind_of(name) == CATEGORICAL:
            columns[name] = np.array(list(old) + new_columns[name], dtype=object)
        else:
            columns[name] = np.concatenate([old, np.asarray(new_columns[name], dtype=np.float64)])
    ids = np.concatenate([train.row_ids, np.arange(start, start + n_new, dtype=np.int64)])
    return Dataset(schema=train.schema, columns=columns, row_ids=ids)


@dataclass(frozen=True)
class MixProvenance:
    """Which parents built one mixed row and which slots took parent b."""

    parent_a: int
    parent_b: int
    mask: tuple[bool, ...]


def _compose_mixed_row(
    train: Dataset, a: int, b: int, mask, slot_groups: list[list[str]]
) -> dict[str, float | str]:
    values: dict[str, float | str] = {}
    for group, take_b in zip(slot_groups, mask):
        source = b if take_b else a
        for name in group:
            values[name] = train.columns[name][source]
    values[train.schema.label_column] = train.label_values[a]
    return values


def _mixed_rows(
    train: Dataset,
    cfg: AugmentConfig,
    stream_tag: int,
    slot_groups: list[list[str]],
) -> tuple[dict[str, list], list[MixProvenance]]:
    """Shared mask-mixing core; slot_groups defines which features share a mask.

    Per output row the stream is consumed as: parent-a pick, parent-b pick,
    lambda, then one uniform per slot group.  Single-feature groups in schema
    order therefore consume the stream identically to per-feature masking,
    which is what makes the clustered variant collapse to the plain one when
    every cluster is a singleton.
    """
    eligible_flat, eligible = _eligible_positions(train, 2, "feature mixing")
    n_new = _n_new(cfg.multiplier, train.n_rows)
    out: dict[str, list] = {name: [] for name in train.schema.names}
    provenance: list[MixProvenance] = []
    for i in range(n_new):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, stream_tag, i]))
        a = int(eligible_flat[rng.integers(eligible_flat.size)])
        members = eligible[train.label_values[a]]
        slot = int(rng.integers(members.size - 1))
        a_slot = int(np.searchsorted(members, a))
        b = int(members[slot + 1 if slot >= a_slot else slot])
        lam = rng.random()
        mask = rng.random(len(slot_groups)) < lam
        for name, value in _compose_mixed_row(train, a, b, mask, slot_groups).items():
            out[name].append(value)
        provenance.append(MixProvenance(parent_a=a, parent_b=b, mask=tuple(bool(m) for m in mask)))
    return out, provenance


def tabcutmix(train: Dataset, cfg: AugmentConfig, first_new_id: int | None = None) -> Dataset:
    """Append rows mixing two same-class parents under a per-feature mask."""
    groups = [[name] for name in train.schema.non_label_columns]
    rows, _ = _mixed_rows(train, cfg, _STREAM_MIX, groups)
    return _append_rows(train, rows, first_new_id)


def tabcutmixplus(train: Dataset, cfg: AugmentConfig, first_new_id: int | None = None) -> Dataset:
    """Like `tabcutmix` but correlated feature clusters swap as one unit."""
    clusters = feature_clusters(train, list(train.schema.non_label_columns), cfg.cluster_threshold)
    rows, _ = _mixed_rows(train, cfg, _STREAM_MIX, clusters)
    return _append_rows(train, rows, first_new_id)


def _class_neighbor_lists(train: Dataset, eligible: dict[str, np.ndarray], k: int) -> dict[int, np.ndarray]:
    """Positions of each eligible row's k nearest same-class rows (self excluded)."""
    stats = fit_encoding(train)
    enc = encode_dataset(train, stats)
    cfg = DistanceConfig()
    neighbors: dict[int, np.ndarray] = {}
    for label, members in eligible.items():
        sub = enc.row_ids[members]
        block = EncodedMatrix(
            schema=enc.schema,
            numeric=enc.numeric[members],
            categorical=enc.categorical[members],
            row_ids=sub,
        )
        d2 = pairwise_sq_dists(block, block, cfg)
        k_class = min(k, members.size - 1)
        for local, pos in enumerate(members):
            order = np.lexsort((sub, d2[local]))
            picked = [members[j] for j in order if j != local][:k_class]
            neighbors[int(pos)] = np.asarray(picked, dtype=np.int64)
    return neighbors


@dataclass(frozen=True)
class SmoteProvenance:
    """Base row, interpolation partner, gap, and the voting neighborhood."""

    base: int
    partner: int
    gap: float
    neighbors: tuple[int, ...]


def _compose_smote_row(
    train: Dataset, base: int, partner: int, gap: float, nbrs: np.ndarray
) -> dict[str, float | str]:
    schema = train.schema
    values: dict[str, float | str] = {}
    for name in schema.names:
        if name == schema.label_column:
            continue
        col = train.columns[name]
        if schema.kind_of(name) == CATEGORICAL:
            votes: dict[str, int] = {}
            for p in nbrs:
                votes[col[p]] = votes.get(col[p], 0) + 1
            best = max(votes.values())
            winners = [v for v, c in votes.items() if c == best]
            # Majority of the neighborhood; any tie falls back to the base row.
            values[name] = winners[0] if len(winners) == 1 else col[base]
        else:
            values[name] = col[base] + gap * (col[partner] - col[base])
    values[schema.label_column] = train.label_values[base]
    return values


def _smote_rows(train: Dataset, cfg: AugmentConfig) -> tuple[dict[str, list], list[SmoteProvenance]]:
    eligible_flat, eligible = _eligible_positions(train, 2, "smote")
    small = sorted(
        label for label, pos in eligible.items() if pos.size < cfg.smote_k + 1
    )
    if small:
        warnings.warn(
            f"smote: k shrunk for classes smaller than k+1 rows: {small}",
            SkippedClassWarning,
            stacklevel=3,
        )
    neighbors = _class_neighbor_lists(train, eligible, cfg.smote_k)
    n_new = _n_new(cfg.multiplier, train.n_rows)
    out: dict[str, list] = {name: [] for name in train.schema.names}
    provenance: list[SmoteProvenance] = []
    for i in range(n_new):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_SMOTE, i]))
        base = int(eligible_flat[rng.integers(eligible_flat.size)])
        nbrs = neighbors[base]
        partner = int(nbrs[rng.integers(nbrs.size)])
        gap = float(rng.random())
        for name, value in _compose_smote_row(train, base, partner, gap, nbrs).items():
            out[name].append(value)
        provenance.append(
            SmoteProvenance(base=base, partner=partner, gap=gap, neighbors=tuple(int(p) for p in nbrs))
        )
    return out, provenance


def smote_nc(train: Dataset, cfg: AugmentConfig, first_new_id: int | None = None) -> Dataset:
    """Append interpolated rows built from same-class nearest neighbors.

    Classes smaller than k+1 keep a shrunken per-class k; classes with a
    single row cannot provide a neighbor and are skipped with a warning.
    """
    out, _ = _smote_rows(train, cfg)
    return _append_rows(train, out, first_new_id)


def pruned_tabcutmix(train: Dataset, scores: ScoreTable, p: float, cfg: AugmentConfig) -> Dataset:
    """Prune the highest-scoring rows, then mix on the survivors.

    The appended row count follows the filtered size; fresh ids start above
    the original id range so removed ids are never reused.
    """
    filtered, _removed = prune(train, scores, p)
    first_new = int(train.row_ids.max()) + 1
    return tabcutmix(filtered, cfg, first_new_id=first_new)
