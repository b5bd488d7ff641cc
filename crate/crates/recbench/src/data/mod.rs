//! Dataset ingestion, splitting, and sparse train/test structures.
//!
//! All structures produced here are immutable after construction and safe to
//! share across concurrent readers; ingestion and splitting themselves are
//! single-threaded per file.

mod log;
mod ncf;
mod popularity;
mod sparse;
mod split;

pub use log::{load_interactions, Event, InteractionLog, LogFormat};
pub use ncf::{load_ncf_split, write_ncf_split};
pub use popularity::{popularity_profile, PopularityProfile};
pub use sparse::SparseInteractionMatrix;
pub use split::{
    sample_test_negatives, temporal_leave_one_out, EvaluationPack, HoldoutEvent, HoldoutSplit,
    TestEntry,
};
