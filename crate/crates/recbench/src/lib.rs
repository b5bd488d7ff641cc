//! Implicit-feedback recommender benchmark.
//!
//! `recbench` fits eight collaborative-filtering models behind a single
//! scoring contract, evaluates them under the sampled-candidate leave-one-out
//! protocol (one held-out positive ranked against a per-user shortlist of
//! sampled negatives), and reports seventeen accuracy, novelty, diversity,
//! and popularity-bias metrics plus pairwise significance tests. A
//! declarative JSON experiment configuration drives the whole pipeline and
//! every run is reproducible from its seeds.
//!
//! The crate is organised as a library first; see the `examples/` directory
//! for one runnable program per capability and `src/bin/recbench.rs` for the
//! thin command-line front end.
//!
//! Modules:
//! - [`data`]: interaction logs, CSR matrices, temporal leave-one-out
//!   splitting, NCF-format split files, popularity statistics.
//! - [`models`]: MostPop, EASE, RP3beta, PureSVD, SLIM, iALS, biased
//!   dot-product MF, and NeuMF, all behind [`models::TrainedModel`].
//! - [`eval`]: candidate ranking and the full metric suite.
//! - [`stats`]: Student's paired t-test on per-user metric vectors.
//! - [`harness`]: experiment configuration, runner, sweeps, and reports.

pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod models;
pub mod stats;

pub use error::{Error, Result};
