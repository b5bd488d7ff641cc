//! The eight recommenders behind one scoring contract.
//!
//! Every fit is deterministic given its training matrix, hyperparameters,
//! and seed; fitted models are immutable and shareable. Scoring is a pure
//! function of the payload, the user, and the requested items.

pub mod container;
mod ease;
mod ials;
mod mf;
mod mostpop;
mod neumf;
mod puresvd;
mod rp3beta;
mod sampling;
mod slim;

use std::sync::Arc;

use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

pub use ease::fit_ease;
pub use ials::fit_ials;
pub use mf::{
    fit_mf, mf_example_gradients, mf_forward, EpochStats, MfExampleGrads, MfModel, MfParams,
    MfTrainer, MfTrainerState, TrainConfig, TrainTrace, SELECTION_CUTOFF,
};
pub use mostpop::fit_mostpop;
pub use neumf::{
    fit_neumf, gmf_forward, mlp_forward, neumf_batch_gradients, neumf_batch_loss, neumf_forward,
    AdamState, AdamTensor, NeuMfBatchGrads, NeuMfModel, NeuMfParams, NeuMfTrainer,
    NeuMfTrainerState,
};
pub use puresvd::fit_puresvd;
pub use rp3beta::fit_rp3beta;
pub use sampling::sample_training_negatives;
pub use slim::fit_slim;

/// Popularity scorer payload: one train count per item.
#[derive(Debug, Clone, PartialEq)]
pub struct MostPopModel {
    pub counts: Vec<f64>,
    pub num_users: usize,
}

/// Dense item-to-item weights, row `s` holding the outgoing weights of
/// source item `s`. The diagonal is zero.
#[derive(Debug, Clone)]
pub struct DenseItemItemModel {
    pub weights: Vec<f64>,
    pub num_items: usize,
    pub train: Arc<SparseInteractionMatrix>,
    pub l2: f64,
}

/// Sparse item-to-item weights in target-major (CSC) layout: column `t`
/// lists the source items contributing to target `t`.
#[derive(Debug, Clone)]
pub struct SparseItemItemModel {
    pub col_offsets: Vec<usize>,
    pub sources: Vec<u32>,
    pub weights: Vec<f64>,
    pub num_items: usize,
    pub train: Arc<SparseInteractionMatrix>,
    /// True when every stored weight is nonnegative (SLIM).
    pub nonnegative: bool,
    /// Columns whose coordinate descent hit the iteration cap.
    pub unconverged_columns: Vec<u32>,
}

impl SparseItemItemModel {
    /// Sources and weights of one target column.
    pub fn column(&self, target: u32) -> (&[u32], &[f64]) {
        let lo = self.col_offsets[target as usize];
        let hi = self.col_offsets[target as usize + 1];
        (&self.sources[lo..hi], &self.weights[lo..hi])
    }
}

/// Latent factors with precomputed user representations (PureSVD).
#[derive(Debug, Clone)]
pub struct PureSvdModel {
    /// Row-major `num_users x factors`.
    pub user_reps: Vec<f64>,
    /// Row-major `num_items x factors`.
    pub item_factors: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub factors: usize,
    pub num_users: usize,
    pub num_items: usize,
    /// Set when the requested rank exceeded the effective rank.
    pub rank_truncated: bool,
}

/// Latent user/item factors (iALS).
#[derive(Debug, Clone)]
pub struct FactorModel {
    /// Row-major `num_users x factors`.
    pub user_factors: Vec<f64>,
    /// Row-major `num_items x factors`.
    pub item_factors: Vec<f64>,
    pub factors: usize,
    pub num_users: usize,
    pub num_items: usize,
    /// Weighted regularized objective after each half-sweep.
    pub objective_trace: Vec<f64>,
}

/// A fitted recommender: variant tag plus payload.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    MostPop(MostPopModel),
    Ease(DenseItemItemModel),
    Rp3Beta(SparseItemItemModel),
    PureSvd(PureSvdModel),
    Slim(SparseItemItemModel),
    Ials(FactorModel),
    Mf(MfModel),
    NeuMf(NeuMfModel),
}

impl TrainedModel {
    pub fn variant(&self) -> &'static str {
        match self {
            TrainedModel::MostPop(_) => "mostpop",
            TrainedModel::Ease(_) => "ease",
            TrainedModel::Rp3Beta(_) => "rp3beta",
            TrainedModel::PureSvd(_) => "puresvd",
            TrainedModel::Slim(_) => "slim",
            TrainedModel::Ials(_) => "ials",
            TrainedModel::Mf(_) => "mf",
            TrainedModel::NeuMf(_) => "neumf",
        }
    }

    pub fn num_items(&self) -> usize {
        match self {
            TrainedModel::MostPop(m) => m.counts.len(),
            TrainedModel::Ease(m) => m.num_items,
            TrainedModel::Rp3Beta(m) | TrainedModel::Slim(m) => m.num_items,
            TrainedModel::PureSvd(m) => m.num_items,
            TrainedModel::Ials(m) => m.num_items,
            TrainedModel::Mf(m) => m.params.num_items(),
            TrainedModel::NeuMf(m) => m.params.num_items(),
        }
    }

    pub fn num_users(&self) -> usize {
        match self {
            TrainedModel::MostPop(m) => m.num_users,
            TrainedModel::Ease(m) => m.train.num_users(),
            TrainedModel::Rp3Beta(m) | TrainedModel::Slim(m) => m.train.num_users(),
            TrainedModel::PureSvd(m) => m.num_users,
            TrainedModel::Ials(m) => m.num_users,
            TrainedModel::Mf(m) => m.params.num_users(),
            TrainedModel::NeuMf(m) => m.params.num_users(),
        }
    }

    /// Scores the requested items for one user. The output order matches the
    /// input order and every score is finite.
    pub fn score(&self, user: u32, items: &[u32]) -> Result<Vec<f64>> {
        if (user as usize) >= self.num_users() {
            return Err(Error::Contract(format!(
                "user {user} out of range (num_users = {})",
                self.num_users()
            )));
        }
        let num_items = self.num_items();
        for &item in items {
            if (item as usize) >= num_items {
                return Err(Error::Contract(format!(
                    "item {item} out of range (num_items = {num_items})"
                )));
            }
        }
        let scores = match self {
            TrainedModel::MostPop(m) => items
                .iter()
                .map(|&i| m.counts[i as usize])
                .collect::<Vec<f64>>(),
            TrainedModel::Ease(m) => {
                let n = m.num_items;
                let mut acc = vec![0.0; items.len()];
                for &s in m.train.row(user) {
                    let row = &m.weights[s as usize * n..(s as usize + 1) * n];
                    for (slot, &t) in items.iter().enumerate() {
                        acc[slot] += row[t as usize];
                    }
                }
                acc
            }
            TrainedModel::Rp3Beta(m) | TrainedModel::Slim(m) => {
                let history = m.train.row(user);
                items
                    .iter()
                    .map(|&t| {
                        let (sources, weights) = m.column(t);
                        sources
                            .iter()
                            .zip(weights)
                            .filter(|(s, _)| history.binary_search(s).is_ok())
                            .map(|(_, w)| w)
                            .sum()
                    })
                    .collect()
            }
            TrainedModel::PureSvd(m) => {
                let f = m.factors;
                let rep = &m.user_reps[user as usize * f..(user as usize + 1) * f];
                items
                    .iter()
                    .map(|&t| {
                        let v = &m.item_factors[t as usize * f..(t as usize + 1) * f];
                        dot(rep, v)
                    })
                    .collect()
            }
            TrainedModel::Ials(m) => {
                let f = m.factors;
                let x = &m.user_factors[user as usize * f..(user as usize + 1) * f];
                items
                    .iter()
                    .map(|&t| {
                        let y = &m.item_factors[t as usize * f..(t as usize + 1) * f];
                        dot(x, y)
                    })
                    .collect()
            }
            TrainedModel::Mf(m) => items
                .iter()
                .map(|&i| mf_forward(&m.params, user, i))
                .collect(),
            TrainedModel::NeuMf(m) => items
                .iter()
                .map(|&i| neumf_forward(&m.params, user, i))
                .collect(),
        };
        for &s in &scores {
            if !s.is_finite() {
                return Err(Error::Numerical {
                    model: self.variant().into(),
                    message: format!("non-finite score for user {user}"),
                });
            }
        }
        Ok(scores)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
