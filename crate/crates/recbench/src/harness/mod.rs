//! Declarative experiment runner: configuration, execution, sweeps, and
//! report emission.

mod config;
mod manifest;
mod report;
mod runner;
mod sweep;

pub use config::{
    DatasetConfig, EvaluationConfig, ExperimentConfig, ModelSpec, OutputConfig, SplitConfig,
    MODEL_VARIANTS,
};
pub use manifest::{config_hash, dataset_fingerprint, Manifest};
pub use report::{emit_reports, load_bundle};
pub use runner::{
    fit_and_evaluate, run_experiment, AggregateRecord, ReportBundle, RunOptions,
    SignificanceRecord, PER_USER_METRICS,
};
pub use sweep::{sweep, sweep_table, SweepData, SweepPoint};

/// Environment variable overriding the configured output directory.
pub const OUT_DIR_ENV: &str = "RECBENCH_OUT_DIR";

/// Sizes the global rayon pool; call once at process start. One thread
/// gives fully sequential, bit-reproducible execution.
pub fn init_thread_pool(threads: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
}
