//! Ranking and the seventeen evaluation metrics.
//!
//! Per-user computations are embarrassingly parallel; every aggregation sums
//! in fixed user order so results do not depend on thread count.

mod accuracy;
mod bias;
mod diversity;
mod novelty;
mod ranking;

pub use accuracy::{accuracy_per_user, aggregate, AccuracyRecord, AggregateRow, ACCURACY_METRICS};
pub use bias::{bias_metrics, BiasReport};
pub use diversity::{diversity_metrics, DiversityReport};
pub use novelty::{novelty_metrics, NoveltyReport};
pub use ranking::{hr_ndcg_with, rank_all_users, rank_candidates, rank_with, RankedList};

use rayon::prelude::*;

use crate::data::{EvaluationPack, PopularityProfile};
use crate::models::TrainedModel;
use crate::Result;

/// Everything the reports need about one model on one dataset.
#[derive(Debug, Clone)]
pub struct ModelEvaluation {
    pub model: String,
    pub cutoff: usize,
    /// Test users in ascending order, aligned with the per-user vectors.
    pub users: Vec<u32>,
    pub ranked: Vec<RankedList>,
    pub accuracy: Vec<AccuracyRecord>,
    pub accuracy_mean: AggregateRow,
    pub novelty: NoveltyReport,
    pub diversity: DiversityReport,
    pub bias: BiasReport,
}

impl ModelEvaluation {
    /// Per-user vector of one accuracy metric, for significance testing.
    pub fn per_user_metric(&self, metric: &str) -> Option<Vec<f64>> {
        if ACCURACY_METRICS.contains(&metric) {
            return Some(
                self.accuracy
                    .iter()
                    .map(|r| r.get(metric).unwrap())
                    .collect(),
            );
        }
        match metric {
            "epc" => Some(self.novelty.epc_per_user.clone()),
            "efd" => Some(self.novelty.efd_per_user.clone()),
            "aclt" => Some(self.bias.aclt_per_user.clone()),
            "arp" => Some(self.bias.arp_per_user.clone()),
            _ => None,
        }
    }
}

/// Ranks all test users with the model and computes the full metric suite.
pub fn evaluate_model(
    name: &str,
    model: &TrainedModel,
    pack: &EvaluationPack,
    profile: &PopularityProfile,
    k: usize,
) -> Result<ModelEvaluation> {
    let users = pack.test_users();
    let ranked = rank_all_users(model, pack, k)?;
    let num_items = pack.train.num_items();
    let accuracy: Result<Vec<AccuracyRecord>> = ranked
        .par_iter()
        .map(|list| {
            let pool = num_items - pack.train.row_len(list.user);
            accuracy_per_user(list, k, pool)
        })
        .collect();
    let accuracy = accuracy?;
    let accuracy_mean = aggregate(&accuracy)?;
    let novelty = novelty_metrics(&ranked, profile, k)?;
    let diversity = diversity_metrics(&ranked, num_items, k)?;
    let bias = bias_metrics(&ranked, profile, pack, k)?;
    Ok(ModelEvaluation {
        model: name.to_string(),
        cutoff: k,
        users,
        ranked,
        accuracy,
        accuracy_mean,
        novelty,
        diversity,
        bias,
    })
}
