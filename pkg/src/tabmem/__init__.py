"""Sample-level memorization auditing for tabular generative pipelines.

The package audits generated snapshots against training data with an exact
nearest-neighbor distance-ratio criterion, tracks per-sample memorization
dynamics across training epochs, scores and prunes high-risk training rows
from early intensity signals, applies mixing-based augmentation, and reports
synthetic-data quality and privacy metrics.  A seeded leak simulator provides
ground truth for validating the whole chain end to end.
"""

from .audit import (
    AttributionCounts,
    AuditConfig,
    CountHistogram,
    SnapshotAudit,
    audit_snapshot,
    count_histogram,
    ratio,
)
from .augment import AugmentConfig, pruned_tabcutmix, smote_nc, tabcutmix, tabcutmixplus
from .cut import (
    CutConfig,
    ScoreTable,
    TagFile,
    improvement,
    prune,
    prune_by_tags,
    remove_random,
    score,
    tag_by_count,
)
from .data import (
    Column,
    Dataset,
    EncodingStats,
    TableSchema,
    encode,
    encode_dataset,
    fit_encoding,
    load_dataset,
    load_schema,
    save_schema,
    write_dataset,
)
from .dynamics import (
    SnapshotTrace,
    TrainingDynamics,
    build_dynamics,
    epoch_indicator,
    group_dynamics,
)
from .errors import ConfigError, InputDataError, InvariantError
from .neighbors import DistanceConfig, Top2Result, distance, top2, top2_batch
from .quality import QualityReport, c2st, dcr_score, mle_auc, shape_score, trend_score
from .simulate import (
    EndToEndReport,
    GroundTruth,
    ProfileConfig,
    SimConfig,
    designate_ground_truth,
    emit_epoch,
    end_to_end,
    make_train,
    run_trace,
)

__version__ = "0.1.0"
