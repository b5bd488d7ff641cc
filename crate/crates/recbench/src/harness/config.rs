//! Declarative experiment configuration.
//!
//! A single JSON document names the dataset and split mode, the models with
//! their hyperparameters and seeds, the evaluation settings, and the output
//! location. Relative dataset paths resolve against the config file's
//! directory, so configs can ship with the repository.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_interactions, load_ncf_split, popularity_profile, sample_test_negatives,
    temporal_leave_one_out, EvaluationPack, LogFormat, PopularityProfile,
};
use crate::models::{
    fit_ease, fit_ials, fit_mf, fit_mostpop, fit_neumf, fit_puresvd, fit_rp3beta, fit_slim,
    TrainConfig, TrainedModel,
};
use crate::{Error, Result};

pub const MODEL_VARIANTS: [&str; 8] = [
    "mostpop", "ease", "rp3beta", "puresvd", "slim", "ials", "mf", "neumf",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    /// Model name (one of the eight variants) to hyperparameters.
    pub models: BTreeMap<String, serde_json::Value>,
    pub evaluation: EvaluationConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub split: SplitConfig,
    /// Large jobs excluded from the default suite; require an explicit
    /// opt-in to run.
    #[serde(default)]
    pub heavy: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitConfig {
    /// Pre-split `<name>.train.rating` / `.test.rating` / `.test.negative`
    /// triple in `dir`.
    NcfSplit { dir: PathBuf },
    /// Raw interaction file split here: binarize, hold out each user's last
    /// event, sample `negatives` test negatives per user.
    TemporalLoo {
        path: PathBuf,
        format: String,
        binarize_threshold: f64,
        negatives: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub cutoff: usize,
    #[serde(default = "default_head_fraction")]
    pub head_fraction: f64,
    /// Metric groups to report: any of "accuracy", "novelty", "diversity",
    /// "bias", or "all".
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "default_threshold")]
    pub significance_threshold: f64,
    /// Accuracy metrics to build significance heatmaps for.
    #[serde(default = "default_significance_metrics")]
    pub significance_metrics: Vec<String>,
}

fn default_head_fraction() -> f64 {
    0.2
}

fn default_metrics() -> Vec<String> {
    vec!["all".into()]
}

fn default_threshold() -> f64 {
    0.05
}

fn default_significance_metrics() -> Vec<String> {
    vec!["ndcg".into(), "hr".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["tsv".into(), "json".into()]
}

impl ExperimentConfig {
    /// Reads and validates a config, resolving relative paths against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset.split {
            SplitConfig::NcfSplit { dir } => resolve(dir),
            SplitConfig::TemporalLoo { path, .. } => resolve(path),
        }
        resolve(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        for name in self.models.keys() {
            if !MODEL_VARIANTS.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown model {name:?}; expected one of {MODEL_VARIANTS:?}"
                )));
            }
        }
        if self.evaluation.cutoff == 0 {
            return Err(Error::Config("evaluation.cutoff must be >= 1".into()));
        }
        let hf = self.evaluation.head_fraction;
        if !(hf > 0.0 && hf < 1.0) {
            return Err(Error::Config(format!(
                "evaluation.head_fraction must lie in (0,1), got {hf}"
            )));
        }
        let thr = self.evaluation.significance_threshold;
        if !(thr > 0.0 && thr < 1.0) {
            return Err(Error::Config(format!(
                "evaluation.significance_threshold must lie in (0,1), got {thr}"
            )));
        }
        for group in &self.evaluation.metrics {
            if !["all", "accuracy", "novelty", "diversity", "bias"].contains(&group.as_str()) {
                return Err(Error::Config(format!("unknown metric group {group:?}")));
            }
        }
        for fmt in &self.output.formats {
            if !["tsv", "json"].contains(&fmt.as_str()) {
                return Err(Error::Config(format!("unknown output format {fmt:?}")));
            }
        }
        // All seeds must be present; parsing the specs enforces the rest of
        // each model's schema.
        for (name, value) in &self.models {
            ModelSpec::from_json(name, value)?;
        }
        Ok(())
    }

    /// Parsed model specs in name order.
    pub fn model_specs(&self) -> Result<Vec<(String, ModelSpec)>> {
        self.models
            .iter()
            .map(|(name, value)| Ok((name.clone(), ModelSpec::from_json(name, value)?)))
            .collect()
    }

    /// Loads the dataset and builds the popularity profile.
    pub fn load_dataset(&self) -> Result<(EvaluationPack, PopularityProfile)> {
        let pack = match &self.dataset.split {
            SplitConfig::NcfSplit { dir } => load_ncf_split(dir, &self.dataset.name)?,
            SplitConfig::TemporalLoo {
                path,
                format,
                binarize_threshold,
                negatives,
                seed,
            } => {
                let format = match format.as_str() {
                    "movielens_dat" => LogFormat::MovielensDat,
                    "tsv_rating" => LogFormat::TsvRating,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown interaction format {other:?}"
                        )))
                    }
                };
                let log = load_interactions(path, format)?;
                let binary = log.binarize(*binarize_threshold);
                let split = temporal_leave_one_out(&binary)?;
                sample_test_negatives(&split, *negatives, *seed)?
            }
        };
        let profile = popularity_profile(&pack.train, self.evaluation.head_fraction)?;
        Ok((pack, profile))
    }
}

/// Typed hyperparameters of one configured model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MostPopSpec {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EaseSpec {
    pub seed: u64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rp3BetaSpec {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureSvdSpec {
    pub seed: u64,
    pub factors: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default = "default_power_iters")]
    pub power_iters: usize,
}

fn default_oversample() -> usize {
    10
}

fn default_power_iters() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlimSpec {
    pub seed: u64,
    pub l1: f64,
    pub l2: f64,
    pub top_k: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iters() -> usize {
    300
}

fn default_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IalsSpec {
    pub seed: u64,
    pub factors: usize,
    pub reg: f64,
    pub alpha: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub seed: u64,
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub batch_size: usize,
}

impl EmbeddingSpec {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            embedding_dim: self.embedding_dim,
            learning_rate: self.learning_rate,
            l2_reg: self.l2_reg,
            negatives_per_positive: self.negatives_per_positive,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            selection_metric: "hr@10".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    MostPop(MostPopSpec),
    Ease(EaseSpec),
    Rp3Beta(Rp3BetaSpec),
    PureSvd(PureSvdSpec),
    Slim(SlimSpec),
    Ials(IalsSpec),
    Mf(EmbeddingSpec),
    NeuMf(EmbeddingSpec),
}

impl ModelSpec {
    pub fn from_json(name: &str, value: &serde_json::Value) -> Result<ModelSpec> {
        let err = |e: serde_json::Error| Error::Config(format!("model {name:?}: {e}"));
        let parsed = match name {
            "mostpop" => ModelSpec::MostPop(serde_json::from_value(value.clone()).map_err(err)?),
            "ease" => ModelSpec::Ease(serde_json::from_value(value.clone()).map_err(err)?),
            "rp3beta" => ModelSpec::Rp3Beta(serde_json::from_value(value.clone()).map_err(err)?),
            "puresvd" => ModelSpec::PureSvd(serde_json::from_value(value.clone()).map_err(err)?),
            "slim" => ModelSpec::Slim(serde_json::from_value(value.clone()).map_err(err)?),
            "ials" => ModelSpec::Ials(serde_json::from_value(value.clone()).map_err(err)?),
            "mf" => ModelSpec::Mf(serde_json::from_value(value.clone()).map_err(err)?),
            "neumf" => ModelSpec::NeuMf(serde_json::from_value(value.clone()).map_err(err)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown model {other:?}; expected one of {MODEL_VARIANTS:?}"
                )))
            }
        };
        Ok(parsed)
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::MostPop(s) => s.seed,
            ModelSpec::Ease(s) => s.seed,
            ModelSpec::Rp3Beta(s) => s.seed,
            ModelSpec::PureSvd(s) => s.seed,
            ModelSpec::Slim(s) => s.seed,
            ModelSpec::Ials(s) => s.seed,
            ModelSpec::Mf(s) | ModelSpec::NeuMf(s) => s.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelSpec::MostPop(s) => s.seed = seed,
            ModelSpec::Ease(s) => s.seed = seed,
            ModelSpec::Rp3Beta(s) => s.seed = seed,
            ModelSpec::PureSvd(s) => s.seed = seed,
            ModelSpec::Slim(s) => s.seed = seed,
            ModelSpec::Ials(s) => s.seed = seed,
            ModelSpec::Mf(s) | ModelSpec::NeuMf(s) => s.seed = seed,
        }
        self
    }

    /// For MF the factor dimension, for NeuMF the predictive factors.
    pub fn with_embedding_dim(mut self, dim: usize) -> Result<Self> {
        match &mut self {
            ModelSpec::Mf(s) | ModelSpec::NeuMf(s) => {
                s.embedding_dim = dim;
                Ok(self)
            }
            _ => Err(Error::Config(
                "embedding dimension sweeps apply to mf and neumf only".into(),
            )),
        }
    }

    /// Hyperparameters as JSON for the run manifest.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ModelSpec::MostPop(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::Ease(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::Rp3Beta(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::PureSvd(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::Slim(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::Ials(s) => serde_json::to_value(s).unwrap(),
            ModelSpec::Mf(s) | ModelSpec::NeuMf(s) => serde_json::to_value(s).unwrap(),
        }
    }

    /// Fits the configured model on the pack.
    pub fn fit(&self, pack: &EvaluationPack) -> Result<TrainedModel> {
        let train = pack.train.clone();
        match self {
            ModelSpec::MostPop(_) => Ok(fit_mostpop(train)),
            ModelSpec::Ease(s) => fit_ease(train, s.l2),
            ModelSpec::Rp3Beta(s) => fit_rp3beta(train, s.alpha, s.beta, s.top_k),
            ModelSpec::PureSvd(s) => {
                fit_puresvd(train, s.factors, s.seed, s.oversample, s.power_iters)
            }
            ModelSpec::Slim(s) => fit_slim(train, s.l1, s.l2, s.top_k, s.max_iters, s.tol),
            ModelSpec::Ials(s) => fit_ials(train, s.factors, s.reg, s.alpha, s.epochs, s.seed),
            ModelSpec::Mf(s) => fit_mf(pack, &s.train_config()),
            ModelSpec::NeuMf(s) => fit_neumf(pack, &s.train_config()),
        }
    }
}
