//! Experiment runner: fit, evaluate, and assemble the report bundle.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec};
use super::manifest::{config_hash, dataset_fingerprint, Manifest};
use crate::eval::{evaluate_model, ModelEvaluation};
use crate::models::{TrainTrace, TrainedModel};
use crate::stats::build_significance_matrix;
use crate::{Error, Result};

const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Per-user metrics that exist as user-aligned vectors.
pub const PER_USER_METRICS: [&str; 11] = [
    "hr", "ndcg", "mrr", "map", "mar", "f1", "lauc", "epc", "efd", "aclt", "arp",
];

/// Run-time switches layered over the config by the CLI.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Restrict the run to these models.
    pub only: Option<Vec<String>>,
    /// Allow configs marked heavy.
    pub allow_heavy: bool,
    /// Replace every model's seed.
    pub seed_override: Option<u64>,
}

/// One model's aggregate numbers, the unit of the report tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub accuracy: BTreeMap<String, f64>,
    pub epc: f64,
    pub efd: f64,
    pub item_coverage: usize,
    pub gini: f64,
    pub entropy_bits: f64,
    pub aclt: f64,
    pub aplt: f64,
    pub arp: f64,
    pub pop_rsp: Option<f64>,
    pub pop_reo: Option<f64>,
    pub user_count: usize,
}

/// Serializable significance matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceRecord {
    pub metric: String,
    pub algorithms: Vec<String>,
    pub threshold: f64,
    /// Row-major p-values; the diagonal is `null`.
    pub p_values: Vec<Option<f64>>,
    pub significant: Vec<bool>,
}

/// Everything a run produces, in a form that serializes to the structured
/// bundle file and regenerates every TSV table deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub dataset: String,
    pub cutoff: usize,
    pub candidate_count: usize,
    /// Test users in ascending order, aligned with the per-user vectors.
    pub users: Vec<u32>,
    pub aggregates: BTreeMap<String, AggregateRecord>,
    /// model -> metric -> per-user values.
    pub per_user: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    pub significance: Vec<SignificanceRecord>,
    pub traces: BTreeMap<String, TrainTrace>,
    pub failures: BTreeMap<String, String>,
    pub manifest: Manifest,
}

impl ReportBundle {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Fits every configured model, evaluates it, runs the pairwise tests, and
/// assembles the bundle. A model failure is isolated: the run continues,
/// the failure lands in the manifest, and the caller maps it to a nonzero
/// exit code.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ReportBundle> {
    let started = Instant::now();
    config.validate()?;
    if config.dataset.heavy && !options.allow_heavy {
        return Err(Error::Config(format!(
            "dataset {:?} is marked heavy; pass --heavy to run it",
            config.dataset.name
        )));
    }
    let specs = selected_specs(config, options)?;
    if specs.is_empty() {
        return Err(Error::Config("model selection matched nothing".into()));
    }
    let (pack, profile) = config.load_dataset()?;

    let mut evaluations: Vec<ModelEvaluation> = Vec::new();
    let mut traces = BTreeMap::new();
    let mut failures = BTreeMap::new();
    let mut model_status = BTreeMap::new();
    for (name, spec) in &specs {
        log::info!("fitting {name}");
        match fit_and_evaluate(name, spec, &pack, &profile, config.evaluation.cutoff) {
            Ok((evaluation, trace)) => {
                evaluations.push(evaluation);
                if let Some(trace) = trace {
                    traces.insert(name.clone(), trace);
                }
                model_status.insert(name.clone(), "ok".to_string());
            }
            Err(e) => {
                log::error!("model {name} failed: {e}");
                failures.insert(name.clone(), e.to_string());
                model_status.insert(name.clone(), format!("failed: {e}"));
            }
        }
    }

    let significance = significance_records(config, &evaluations)?;

    let manifest = Manifest {
        dataset: config.dataset.name.clone(),
        config_hash: config_hash(config)?,
        config: serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?,
        dataset_fingerprint: dataset_fingerprint(config)?,
        candidate_count: pack.candidate_count,
        seeds: specs
            .iter()
            .map(|(name, spec)| (name.clone(), spec.seed()))
            .collect(),
        model_hyperparameters: specs
            .iter()
            .map(|(name, spec)| (name.clone(), spec.to_json()))
            .collect(),
        model_status,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        toolkit_version: TOOLKIT_VERSION.to_string(),
    };

    let mut aggregates = BTreeMap::new();
    let mut per_user = BTreeMap::new();
    let users = pack.test_users();
    for evaluation in &evaluations {
        aggregates.insert(evaluation.model.clone(), aggregate_record(evaluation));
        let mut metrics = BTreeMap::new();
        for metric in PER_USER_METRICS {
            if let Some(vector) = evaluation.per_user_metric(metric) {
                metrics.insert(metric.to_string(), vector);
            }
        }
        per_user.insert(evaluation.model.clone(), metrics);
    }

    Ok(ReportBundle {
        dataset: config.dataset.name.clone(),
        cutoff: config.evaluation.cutoff,
        candidate_count: pack.candidate_count,
        users,
        aggregates,
        per_user,
        significance,
        traces,
        failures,
        manifest,
    })
}

/// Fits one model and evaluates it, returning the training trace when the
/// model has one.
pub fn fit_and_evaluate(
    name: &str,
    spec: &ModelSpec,
    pack: &crate::data::EvaluationPack,
    profile: &crate::data::PopularityProfile,
    cutoff: usize,
) -> Result<(ModelEvaluation, Option<TrainTrace>)> {
    let model = spec.fit(pack)?;
    let trace = match &model {
        TrainedModel::Mf(m) => Some(m.trace.clone()),
        TrainedModel::NeuMf(m) => Some(m.trace.clone()),
        _ => None,
    };
    let evaluation = evaluate_model(name, &model, pack, profile, cutoff)?;
    Ok((evaluation, trace))
}

fn selected_specs(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<Vec<(String, ModelSpec)>> {
    let mut specs = config.model_specs()?;
    if let Some(only) = &options.only {
        for name in only {
            if !config.models.contains_key(name) {
                return Err(Error::Config(format!(
                    "--only names {name:?}, which the config does not define"
                )));
            }
        }
        specs.retain(|(name, _)| only.contains(name));
    }
    if let Some(seed) = options.seed_override {
        specs = specs
            .into_iter()
            .map(|(name, spec)| (name, spec.with_seed(seed)))
            .collect();
    }
    Ok(specs)
}

fn significance_records(
    config: &ExperimentConfig,
    evaluations: &[ModelEvaluation],
) -> Result<Vec<SignificanceRecord>> {
    let mut records = Vec::new();
    if evaluations.len() < 2 {
        return Ok(records);
    }
    for metric in &config.evaluation.significance_metrics {
        let mut per_algorithm = BTreeMap::new();
        for evaluation in evaluations {
            let vector = evaluation.per_user_metric(metric).ok_or_else(|| {
                Error::Config(format!("unknown significance metric {metric:?}"))
            })?;
            per_algorithm.insert(evaluation.model.clone(), vector);
        }
        let matrix = build_significance_matrix(
            &per_algorithm,
            metric,
            config.evaluation.significance_threshold,
        )?;
        records.push(SignificanceRecord {
            metric: matrix.metric,
            algorithms: matrix.algorithms,
            threshold: matrix.threshold,
            p_values: matrix
                .p_values
                .iter()
                .map(|&p| if p.is_nan() { None } else { Some(p) })
                .collect(),
            significant: matrix.significant,
        });
    }
    Ok(records)
}

fn aggregate_record(evaluation: &ModelEvaluation) -> AggregateRecord {
    AggregateRecord {
        accuracy: evaluation.accuracy_mean.means.clone(),
        epc: evaluation.novelty.epc,
        efd: evaluation.novelty.efd,
        item_coverage: evaluation.diversity.item_coverage,
        gini: evaluation.diversity.gini,
        entropy_bits: evaluation.diversity.entropy_bits,
        aclt: evaluation.bias.aclt,
        aplt: evaluation.bias.aplt,
        arp: evaluation.bias.arp,
        pop_rsp: evaluation.bias.pop_rsp,
        pop_reo: evaluation.bias.pop_reo,
        user_count: evaluation.accuracy_mean.user_count,
    }
}
