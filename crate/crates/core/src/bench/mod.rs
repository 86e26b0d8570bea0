//! Benchmark assembly: ingest heterogeneous detection datasets, merge and
//! clean them into one manifest, drop rare classes, split, summarise, and
//! compose training sets for external detectors.

mod compose;
mod ingest;
mod merge;
mod split;
mod stats;

pub use compose::{compose_training_set, ComposeMode};
pub use ingest::{ingest, Fragment, SourceFormat};
pub use merge::{
    exclude_classes, filter_small_classes, merge_and_clean, read_class_list, ConflictPolicy, DroppedAnnotation,
    MergeReport, MergeRule, MergeRules, RemovalReport,
};
pub use split::{fraction_count, split, SplitPlan, SplitVariant, DEFAULT_TRAINVAL_SIZE, DEFAULT_VAL_FRACTION};
pub use stats::{
    compute_stats, format_instances, format_scale, significant, thousands, ClassRow, CorpusStats, DatasetRow, Range,
    SizeShares, DEFAULT_BIG_THRESHOLD, STATS_HEADERS, TOTAL_ROW,
};

/// Classes with fewer images than this are removed.
pub const MIN_CLASS_IMAGES: usize = 10;
