//! Embedding-dimension sweeps for the two trained-embedding models.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec};
use super::runner::fit_and_evaluate;
use crate::{Error, Result};

/// One `(dimension, HR@k, nDCG@k)` curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub dimension: usize,
    pub hr: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepData {
    pub dataset: String,
    pub model: String,
    pub cutoff: usize,
    pub points: Vec<SweepPoint>,
}

/// Runs one full train/evaluate cycle per dimension for an MF or NeuMF
/// model defined in the config.
pub fn sweep(
    config: &ExperimentConfig,
    model_name: &str,
    dimensions: &[usize],
    allow_heavy: bool,
) -> Result<SweepData> {
    config.validate()?;
    if config.dataset.heavy && !allow_heavy {
        return Err(Error::Config(format!(
            "dataset {:?} is marked heavy; pass --heavy to run it",
            config.dataset.name
        )));
    }
    if dimensions.is_empty() {
        return Err(Error::Config("sweep needs at least one dimension".into()));
    }
    let value = config.models.get(model_name).ok_or_else(|| {
        Error::Config(format!("model {model_name:?} is not in the config"))
    })?;
    let base = ModelSpec::from_json(model_name, value)?;
    if !matches!(base, ModelSpec::Mf(_) | ModelSpec::NeuMf(_)) {
        return Err(Error::Config(
            "sweeps apply to the mf and neumf models only".into(),
        ));
    }
    let (pack, profile) = config.load_dataset()?;
    let mut points = Vec::with_capacity(dimensions.len());
    for &dim in dimensions {
        let spec = base.clone().with_embedding_dim(dim)?;
        log::info!("sweep {model_name} at dimension {dim}");
        let (evaluation, _) =
            fit_and_evaluate(model_name, &spec, &pack, &profile, config.evaluation.cutoff)?;
        points.push(SweepPoint {
            dimension: dim,
            hr: evaluation.accuracy_mean.means["hr"],
            ndcg: evaluation.accuracy_mean.means["ndcg"],
        });
    }
    Ok(SweepData {
        dataset: config.dataset.name.clone(),
        model: model_name.to_string(),
        cutoff: config.evaluation.cutoff,
        points,
    })
}

/// `dimension \t hr \t ndcg` rows, four decimals, ready for plotting.
pub fn sweep_table(data: &SweepData) -> String {
    let mut out = String::from("dimension\thr\tndcg\n");
    for p in &data.points {
        out.push_str(&format!("{}\t{:.4}\t{:.4}\n", p.dimension, p.hr, p.ndcg));
    }
    out
}
