"""Batch command-line surface: audit, dynamics, cut, augment, quality, simulate.

Every command reads CSV data plus a JSON schema, writes machine-readable
reports (JSON, keys sorted) and tables (CSV) into --out-dir, and echoes the
fully resolved configuration next to its outputs so any run can be replayed
exactly.  An optional JSON config file can supply defaults; explicit flags
win, and unknown keys are rejected.  With --plot, report data is additionally
rendered to PNG files.

Exit codes: 0 success, 2 input error, 3 configuration error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

from . import figures
from .audit import AuditConfig, audit_snapshot, count_histogram
from .augment import (
    AugmentConfig,
    pruned_tabcutmix,
    smote_nc,
    tabcutmix,
    tabcutmixplus,
)
from .cut import CutConfig, ScoreTable, TagFile, prune, prune_by_tags, score, tag_by_count
from .data import fit_encoding, load_dataset, load_schema, save_schema, write_dataset
from .dynamics import (
    SnapshotTrace,
    aggregate_counts,
    build_dynamics,
    group_dynamics,
    load_mem_auc_csv,
)
from .errors import ConfigError, InputDataError, InvariantError
from .neighbors import DistanceConfig
from .quality import QualityReport, c2st, dcr_score, mle_auc, shape_score, trend_score
from .simulate import (
    GroundTruth,
    ProfileConfig,
    SimConfig,
    designate_ground_truth,
    emit_epoch,
    make_train,
    schema_for,
)

DEFAULT_TAU = 0.3333333333

_SNAPSHOT_NAME = re.compile(r"^epoch_(\d{4})\.csv$")

_COMMON_KEYS = {"seed", "tau", "threads", "out_dir", "plot"}
_COMMAND_KEYS = {
    "audit": {"train", "generated", "schema", "per_row"},
    "dynamics": {"train", "snapshots", "schema", "tags", "tag_fraction"},
    "cut": {
        "train",
        "schema",
        "mem_auc",
        "tags_from",
        "pooling",
        "warmup_epochs",
        "prune_fraction",
        "source_name",
    },
    "augment": {
        "train",
        "schema",
        "method",
        "multiplier",
        "smote_k",
        "cluster_threshold",
        "scores",
        "prune_fraction",
        "with_provenance",
    },
    "quality": {"real", "synth", "schema", "holdout", "test", "include_label_pairs", "skip_mem_ratio"},
    "simulate": {
        "n_train",
        "n_numeric",
        "cat_cardinalities",
        "leak_fraction",
        "replica_noise",
        "cat_flip",
        "epochs",
        "per_epoch",
        "profile",
        "peak",
        "spike_start",
        "spike_end",
        "floor_frac",
        "reuse_train",
        "reuse_holdout",
        "truth",
        "drop_tags",
    },
}


def _apply_config_file(args: argparse.Namespace) -> None:
    if getattr(args, "config", None) is None:
        return
    path = Path(args.config)
    if not path.exists():
        raise InputDataError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {path}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must contain a JSON object")
    unknown_sections = set(obj) - {"common", args.command}
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    merged: dict = {}
    merged.update(obj.get("common", {}))
    merged.update(obj.get(args.command, {}))
    allowed = _COMMON_KEYS | _COMMAND_KEYS[args.command]
    unknown = set(merged) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in merged.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir if args.out_dir is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _echo_config(command: str, params: dict, out: Path) -> None:
    clean = {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()}
    _write_json({"command": command, "parameters": clean}, out / "resolved_config.json")


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required")


def read_snapshot_dir(directory: str | Path, schema) -> SnapshotTrace:
    """Load epoch_0001.csv.. from a directory; gaps and stray names are errors."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputDataError(f"snapshot directory not found: {directory}")
    found: list[tuple[int, Path]] = []
    for p in sorted(directory.iterdir()):
        if not p.is_file() or p.suffix != ".csv":
            continue
        m = _SNAPSHOT_NAME.match(p.name)
        if m is None:
            raise InputDataError(f"malformed snapshot name: {p.name}")
        found.append((int(m.group(1)), p))
    if not found:
        raise InputDataError(f"no snapshots found in {directory}")
    found.sort()
    expected = list(range(1, len(found) + 1))
    got = [i for i, _ in found]
    if got != expected:
        missing = sorted(set(expected) - set(got))
        raise InputDataError(f"snapshot epochs not contiguous; missing index {missing[:5]}")
    return SnapshotTrace(epochs=tuple((i, load_dataset(p, schema)) for i, p in found))


def _audit_cfg(args: argparse.Namespace) -> AuditConfig:
    tau = args.tau if args.tau is not None else DEFAULT_TAU
    return AuditConfig(tau=float(tau), distance=DistanceConfig())


def _threads(args: argparse.Namespace) -> int:
    t = args.threads if args.threads is not None else 1
    if int(t) < 1:
        raise ConfigError("threads must be at least 1")
    return int(t)


# ---------------------------------------------------------------------------
# subcommands


def cmd_audit(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    _require(args, "train", "generated", "schema")
    out = _out_dir(args)
    cfg = _audit_cfg(args)
    threads = _threads(args)
    schema = load_schema(args.schema)
    train = load_dataset(args.train, schema)
    generated = load_dataset(args.generated, schema)
    stats = fit_encoding(train)
    snap = audit_snapshot(generated, train, stats, cfg, threads=threads)
    _write_json(snap.report_dict(), out / "audit_report.json")

    hist = count_histogram(snap.counts)
    with (out / "count_histogram.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["count", "n_rows"])
        for value, freq in sorted(hist.bins.items()):
            writer.writerow([value, freq])
    with (out / "count_ranked.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "count"])
        for rank, value in hist.ranked:
            writer.writerow([rank, value])
    if args.per_row:
        with (out / "audit_rows.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["gen_row_id", "ratio", "memorized", "nn1_id"])
            for i in range(snap.n_generated):
                writer.writerow(
                    [
                        int(snap.gen_row_ids[i]),
                        format(float(snap.ratios[i]), ".17g"),
                        int(snap.memorized[i]),
                        int(snap.nn1_ids[i]),
                    ]
                )
    if args.plot:
        figures.save_ratio_histogram(snap.ratios, cfg.tau, out / "ratio_histogram.png")
        figures.save_count_tail(hist, out / "count_tail.png")
    _echo_config(
        "audit",
        {
            "train": args.train,
            "generated": args.generated,
            "schema": args.schema,
            "tau": cfg.tau,
            "threads": threads,
            "per_row": bool(args.per_row),
            "plot": bool(args.plot),
            "out_dir": str(out),
        },
        out,
    )
    return 0


def cmd_dynamics(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    _require(args, "train", "snapshots", "schema")
    out = _out_dir(args)
    cfg = _audit_cfg(args)
    threads = _threads(args)
    schema = load_schema(args.schema)
    train = load_dataset(args.train, schema)
    trace = read_snapshot_dir(args.snapshots, schema)
    stats = fit_encoding(train)
    dyn = build_dynamics(trace, train, stats, cfg, threads=threads)
    dyn.write_events_csv(out / "dynamics_events.csv")
    dyn.write_mem_auc_csv(out / "mem_auc_series.csv")

    if args.tags is not None:
        tags = TagFile.load(args.tags)
    else:
        fraction = float(args.tag_fraction if args.tag_fraction is not None else 0.1)
        totals = aggregate_counts(trace, train, stats, cfg, threads=threads)
        tags = tag_by_count(totals, fraction, source="derived_from_counts")
        tags.save(out / "derived_tags.json")
    curves = group_dynamics(dyn, tags)
    _write_json(curves.to_json_dict(), out / "group_curves.json")
    if args.plot:
        figures.save_group_curves(curves, out / "group_curves.png")
    _echo_config(
        "dynamics",
        {
            "train": args.train,
            "snapshots": args.snapshots,
            "schema": args.schema,
            "tau": cfg.tau,
            "threads": threads,
            "tags": args.tags,
            "tag_fraction": args.tag_fraction,
            "plot": bool(args.plot),
            "out_dir": str(out),
        },
        out,
    )
    return 0


def cmd_cut(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    _require(args, "train", "schema")
    out = _out_dir(args)
    schema = load_schema(args.schema)
    train = load_dataset(args.train, schema)
    p = float(args.prune_fraction if args.prune_fraction is not None else 0.1)
    source_name = args.source_name if args.source_name is not None else "cut"

    if (args.mem_auc is None) == (args.tags_from is None):
        raise ConfigError("provide exactly one of --mem-auc or --tags-from")

    if args.tags_from is not None:
        tags = TagFile.load(args.tags_from)
        filtered = prune_by_tags(train, tags)
        removed = tags
        table = None
        threshold = None
    else:
        series = load_mem_auc_csv(args.mem_auc)
        n_epochs = series.mem_auc.shape[1]
        warmup = int(
            args.warmup_epochs if args.warmup_epochs is not None else math.ceil(0.2 * n_epochs)
        )
        cut_cfg = CutConfig(
            warmup_epochs=warmup,
            pooling=args.pooling if args.pooling is not None else "top_k_mean",
            prune_fraction=p,
        )
        table = score(series, cut_cfg)
        filtered, removed = prune(train, table, p, source=source_name)
        table.write_csv(out / "scores.csv")
        removed_scores = [table.as_dict()[i] for i in removed.ids]
        threshold = min(removed_scores) if removed_scores else None
    removed.save(out / "removed_tags.json")
    write_dataset(filtered, out / "filtered_train.csv")
    if args.plot and table is not None:
        figures.save_score_distribution(table.scores, threshold, out / "score_distribution.png")
    _echo_config(
        "cut",
        {
            "train": args.train,
            "schema": args.schema,
            "mem_auc": args.mem_auc,
            "tags_from": args.tags_from,
            "pooling": args.pooling,
            "warmup_epochs": args.warmup_epochs,
            "prune_fraction": p,
            "source_name": source_name,
            "plot": bool(args.plot),
            "out_dir": str(out),
        },
        out,
    )
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    _require(args, "train", "schema")
    out = _out_dir(args)
    schema = load_schema(args.schema)
    train = load_dataset(args.train, schema)
    method = args.method
    seed = int(args.seed if args.seed is not None else 0)
    cfg = AugmentConfig(
        method=method if method != "pruned-tabcutmix" else "tabcutmix",
        multiplier=float(args.multiplier if args.multiplier is not None else 1.0),
        smote_k=int(args.smote_k if args.smote_k is not None else 5),
        cluster_threshold=float(args.cluster_threshold if args.cluster_threshold is not None else 0.5),
        seed=seed,
    )
    if method == "smote":
        augmented = smote_nc(train, cfg)
        origin_tag = "smote"
    elif method == "tabcutmix":
        augmented = tabcutmix(train, cfg)
        origin_tag = "tcm"
    elif method == "tabcutmixplus":
        augmented = tabcutmixplus(train, cfg)
        origin_tag = "tcmp"
    elif method == "pruned-tabcutmix":
        if args.scores is None:
            raise ConfigError("pruned-tabcutmix needs --scores")
        p = float(args.prune_fraction if args.prune_fraction is not None else 0.1)
        table = ScoreTable.read_csv(args.scores)
        augmented = pruned_tabcutmix(train, table, p, cfg)
        origin_tag = "tcm"
    else:
        raise ConfigError(f"unknown augmentation method: {method!r}")

    extra = None
    if args.with_provenance:
        boundary = int(train.row_ids.max())
        extra = {"origin": ["real" if int(i) <= boundary else origin_tag for i in augmented.row_ids]}
    write_dataset(augmented, out / "augmented.csv", extra_columns=extra)
    _echo_config(
        "augment",
        {
            "train": args.train,
            "schema": args.schema,
            "method": method,
            "multiplier": cfg.multiplier,
            "smote_k": cfg.smote_k,
            "cluster_threshold": cfg.cluster_threshold,
            "scores": args.scores,
            "prune_fraction": args.prune_fraction,
            "seed": seed,
            "with_provenance": bool(args.with_provenance),
            "out_dir": str(out),
        },
        out,
    )
    return 0


def cmd_quality(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    _require(args, "real", "synth", "schema")
    out = _out_dir(args)
    seed = int(args.seed if args.seed is not None else 0)
    threads = _threads(args)
    schema = load_schema(args.schema)
    real = load_dataset(args.real, schema)
    synth = load_dataset(args.synth, schema)

    shape, per_column = shape_score(real, synth)
    trend, per_pair = trend_score(real, synth, include_label=bool(args.include_label_pairs))
    c2st_value = c2st(real, synth, seed=seed)
    dcr_value = None
    if args.holdout is not None:
        holdout = load_dataset(args.holdout, schema)
        dcr_value = dcr_score(synth, real, holdout)
    mle_value = None
    if args.test is not None:
        test = load_dataset(args.test, schema)
        mle_value = mle_auc(synth, test, seed=seed)
    mem_ratio_value = None
    if not args.skip_mem_ratio:
        cfg = _audit_cfg(args)
        stats = fit_encoding(real)
        mem_ratio_value = audit_snapshot(synth, real, stats, cfg, threads=threads).mem_ratio

    report = QualityReport(
        shape=shape,
        trend=trend,
        c2st=c2st_value,
        dcr=dcr_value,
        mle=mle_value,
        mem_ratio=mem_ratio_value,
        shape_per_column=per_column,
        trend_per_pair=per_pair,
    )
    _write_json(report.to_json_dict(), out / "quality_report.json")
    with (out / "shape_columns.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["column", "score"])
        for name, value in per_column.items():
            writer.writerow([name, format(value, ".17g")])
    with (out / "trend_pairs.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair", "score"])
        for name, value in per_pair.items():
            writer.writerow([name, format(value, ".17g")])
    if args.plot:
        figures.save_shape_bars(per_column, out / "shape_columns.png")
    _echo_config(
        "quality",
        {
            "real": args.real,
            "synth": args.synth,
            "schema": args.schema,
            "holdout": args.holdout,
            "test": args.test,
            "seed": seed,
            "tau": args.tau if args.tau is not None else DEFAULT_TAU,
            "threads": threads,
            "include_label_pairs": bool(args.include_label_pairs),
            "skip_mem_ratio": bool(args.skip_mem_ratio),
            "plot": bool(args.plot),
            "out_dir": str(out),
        },
        out,
    )
    return 0


def _parse_cardinalities(raw) -> tuple[int, ...]:
    if raw is None:
        return (3, 4)
    if isinstance(raw, (list, tuple)):
        return tuple(int(v) for v in raw)
    text = str(raw).strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.split(","))


def cmd_simulate(args: argparse.Namespace) -> int:
    _apply_config_file(args)
    out = _out_dir(args)
    profile = ProfileConfig(
        kind=args.profile if args.profile is not None else "early_spike",
        peak=float(args.peak if args.peak is not None else 0.8),
        spike_start=int(args.spike_start if args.spike_start is not None else 3),
        spike_end=int(args.spike_end if args.spike_end is not None else 8),
        floor_frac=float(args.floor_frac if args.floor_frac is not None else 0.25),
    )
    cfg = SimConfig(
        n_train=int(args.n_train if args.n_train is not None else 1000),
        n_numeric=int(args.n_numeric if args.n_numeric is not None else 4),
        cat_cardinalities=_parse_cardinalities(args.cat_cardinalities),
        leak_fraction=float(args.leak_fraction if args.leak_fraction is not None else 0.1),
        replica_noise=float(args.replica_noise if args.replica_noise is not None else 0.05),
        cat_flip=float(args.cat_flip if args.cat_flip is not None else 0.02),
        epochs=int(args.epochs if args.epochs is not None else 20),
        per_epoch=int(args.per_epoch) if args.per_epoch is not None else None,
        profile=profile,
        seed=int(args.seed if args.seed is not None else 0),
    )
    schema = schema_for(cfg)

    if args.reuse_train is not None:
        train = load_dataset(args.reuse_train, schema)
        holdout = load_dataset(args.reuse_holdout, schema) if args.reuse_holdout is not None else None
        if args.drop_tags is not None:
            tags = TagFile.load(args.drop_tags)
            train = prune_by_tags(train, tags)
        truth = (
            GroundTruth.load(args.truth).with_empty_log()
            if args.truth is not None
            else designate_ground_truth(train, cfg)
        )
    else:
        if args.drop_tags is not None or args.truth is not None:
            raise ConfigError("--drop-tags/--truth require --reuse-train")
        train, holdout = make_train(cfg)
        truth = designate_ground_truth(train, cfg)

    save_schema(schema, out / "schema.json")
    write_dataset(train, out / "train.csv")
    if holdout is not None:
        write_dataset(holdout, out / "holdout.csv")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    n_rows = cfg.per_epoch or train.n_rows
    for e in range(1, cfg.epochs + 1):
        snapshot = emit_epoch(train, truth, e, cfg, n_rows=n_rows)
        write_dataset(snapshot, snap_dir / f"epoch_{e:04d}.csv")
    truth.save(out / "truth.json")
    _echo_config(
        "simulate",
        {
            "n_train": cfg.n_train,
            "n_numeric": cfg.n_numeric,
            "cat_cardinalities": list(cfg.cat_cardinalities),
            "leak_fraction": cfg.leak_fraction,
            "replica_noise": cfg.replica_noise,
            "cat_flip": cfg.cat_flip,
            "epochs": cfg.epochs,
            "per_epoch": cfg.per_epoch,
            "profile": profile.kind,
            "peak": profile.peak,
            "spike_start": profile.spike_start,
            "spike_end": profile.spike_end,
            "floor_frac": profile.floor_frac,
            "seed": cfg.seed,
            "reuse_train": args.reuse_train,
            "reuse_holdout": args.reuse_holdout,
            "truth": args.truth,
            "drop_tags": args.drop_tags,
            "out_dir": str(out),
        },
        out,
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser, with_tau: bool = True) -> None:
    sub.add_argument("--schema", help="schema JSON file")
    sub.add_argument("--seed", type=int, help="base seed for all named substreams")
    sub.add_argument("--out-dir", dest="out_dir", help="output directory (default: current)")
    if with_tau:
        sub.add_argument("--tau", type=float, help=f"memorization threshold (default {DEFAULT_TAU})")
    sub.add_argument("--threads", type=int, help="worker threads for batched scans")
    sub.add_argument("--plot", action="store_true", default=None, help="render PNG figures")
    sub.add_argument("--config", help="JSON config file supplying defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabmem",
        description="Audit, track, prune, augment, and score memorization in tabular generative pipelines.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("audit", help="audit one generated snapshot against training data")
    p.add_argument("--train", help="training CSV")
    p.add_argument("--generated", help="generated CSV")
    p.add_argument("--per-row", dest="per_row", action="store_true", default=None, help="write per-row audit CSV")
    _add_common(p)
    p.set_defaults(func=cmd_audit)

    p = subs.add_parser("dynamics", help="per-sample temporal records across a snapshot directory")
    p.add_argument("--train", help="training CSV")
    p.add_argument("--snapshots", help="directory of epoch_0001.csv..")
    p.add_argument("--tags", help="tag file for group curves (derived from counts when omitted)")
    p.add_argument("--tag-fraction", dest="tag_fraction", type=float, help="fraction for derived tags (default 0.1)")
    _add_common(p)
    p.set_defaults(func=cmd_dynamics)

    p = subs.add_parser("cut", help="score and prune training rows, or prune from a tag file")
    p.add_argument("--train", help="training CSV")
    p.add_argument("--mem-auc", dest="mem_auc", help="dynamics mem_auc_series.csv export")
    p.add_argument("--tags-from", dest="tags_from", help="prune exactly the ids in this tag file")
    p.add_argument("--pooling", choices=["top_k_mean", "mean", "max"], help="score pooling (default top_k_mean)")
    p.add_argument("--warmup-epochs", dest="warmup_epochs", type=int, help="warm-up window T (default 20%% of trace)")
    p.add_argument("--prune-fraction", dest="prune_fraction", type=float, help="fraction to remove (default 0.1)")
    p.add_argument("--source-name", dest="source_name", help="source label recorded in the removed tag file")
    _add_common(p, with_tau=False)
    p.set_defaults(func=cmd_cut)

    p = subs.add_parser("augment", help="append augmented rows to a training set")
    p.add_argument("--train", help="training CSV")
    p.add_argument(
        "--method",
        choices=["smote", "tabcutmix", "tabcutmixplus", "pruned-tabcutmix"],
        default="tabcutmix",
    )
    p.add_argument("--multiplier", type=float, help="augmented rows per original row (default 1.0)")
    p.add_argument("--smote-k", dest="smote_k", type=int, help="neighbors for smote (default 5)")
    p.add_argument(
        "--cluster-threshold", dest="cluster_threshold", type=float, help="dendrogram cut (default 0.5)"
    )
    p.add_argument("--scores", help="score CSV for pruned-tabcutmix")
    p.add_argument("--prune-fraction", dest="prune_fraction", type=float, help="fraction for pruned-tabcutmix")
    p.add_argument(
        "--with-provenance", dest="with_provenance", action="store_true", default=None,
        help="append an origin column to the output CSV",
    )
    _add_common(p, with_tau=False)
    p.set_defaults(func=cmd_augment)

    p = subs.add_parser("quality", help="synthetic data quality and privacy report")
    p.add_argument("--real", help="real data CSV (training reference)")
    p.add_argument("--synth", help="synthetic data CSV")
    p.add_argument("--holdout", help="holdout CSV; enables the dcr score")
    p.add_argument("--test", help="real test CSV; enables the mle score")
    p.add_argument(
        "--include-label-pairs", dest="include_label_pairs", action="store_true", default=None,
        help="include the label column in trend pairs",
    )
    p.add_argument(
        "--skip-mem-ratio", dest="skip_mem_ratio", action="store_true", default=None,
        help="skip the memorization ratio in the report",
    )
    _add_common(p)
    p.set_defaults(func=cmd_quality)

    p = subs.add_parser("simulate", help="write a leaky-generator run to disk")
    p.add_argument("--n-train", dest="n_train", type=int, help="total rows before the holdout carve")
    p.add_argument("--n-numeric", dest="n_numeric", type=int, help="numeric column count")
    p.add_argument(
        "--cat-cardinalities", dest="cat_cardinalities",
        help="comma-separated categorical cardinalities (default 3,4)",
    )
    p.add_argument("--leak-fraction", dest="leak_fraction", type=float)
    p.add_argument("--replica-noise", dest="replica_noise", type=float)
    p.add_argument("--cat-flip", dest="cat_flip", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--per-epoch", dest="per_epoch", type=int, help="generated rows per epoch (default: train size)")
    p.add_argument("--profile", choices=["early_spike", "gradual"])
    p.add_argument("--peak", type=float)
    p.add_argument("--spike-start", dest="spike_start", type=int)
    p.add_argument("--spike-end", dest="spike_end", type=int)
    p.add_argument("--floor-frac", dest="floor_frac", type=float)
    p.add_argument("--reuse-train", dest="reuse_train", help="simulate against an existing train CSV")
    p.add_argument("--reuse-holdout", dest="reuse_holdout", help="copy an existing holdout CSV through")
    p.add_argument("--truth", help="truth JSON from a previous run (keeps the high-risk designation)")
    p.add_argument("--drop-tags", dest="drop_tags", help="tag file of ids to remove from the reused train set")
    _add_common(p, with_tau=False)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001 - surface as internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


def entrypoint() -> None:
    sys.exit(main())
