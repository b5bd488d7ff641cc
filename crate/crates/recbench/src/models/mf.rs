//! Biased dot-product matrix factorization trained with pointwise logistic
//! loss.
//!
//! The score of `(u, i)` is `b_g + b_u[u] + b_i[i] + P[u] . Q[i]`. Training
//! runs plain per-example SGD over each positive and `m` freshly sampled
//! negatives per epoch, with L2 weight decay on every touched parameter.
//! After each epoch HR@10 is measured on the evaluation pack and the
//! parameters of the best epoch are kept (ties go to the earliest epoch).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sampling::sample_training_negatives;
use super::{dot, TrainedModel};
use crate::data::EvaluationPack;
use crate::eval::hr_ndcg_with;
use crate::{Error, Result};

/// Cutoff of the epoch-selection metric (HR@10).
pub const SELECTION_CUTOFF: usize = 10;

/// Shared training configuration for the embedding models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// MF: the factor dimension d. NeuMF: the predictive factors f (total
    /// embedding budget 3f: f for GMF plus 2f for the MLP side).
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    /// Minibatch size for NeuMF; MF updates per example regardless.
    pub batch_size: usize,
    pub seed: u64,
    /// Fixed to "hr@10": per-epoch model selection metric.
    pub selection_metric: String,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0
            || self.learning_rate <= 0.0
            || self.l2_reg < 0.0
            || self.negatives_per_positive == 0
            || self.epochs == 0
            || self.batch_size == 0
        {
            return Err(Error::Contract(format!(
                "invalid train config: {self:?} (all sizes positive, rates nonnegative)"
            )));
        }
        if self.selection_metric != "hr@10" {
            return Err(Error::Contract(format!(
                "selection_metric is fixed to hr@10, got {:?}",
                self.selection_metric
            )));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embedding_dim: 16,
            learning_rate: 0.002,
            l2_reg: 0.005,
            negatives_per_positive: 4,
            epochs: 10,
            batch_size: 256,
            seed: 42,
            selection_metric: "hr@10".into(),
        }
    }
}

/// Embeddings and biases of the dot-product scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct MfParams {
    dim: usize,
    num_users: usize,
    num_items: usize,
    pub user_emb: Vec<f64>,
    pub item_emb: Vec<f64>,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub global_bias: f64,
}

impl MfParams {
    pub fn zeros(num_users: usize, num_items: usize, dim: usize) -> Self {
        MfParams {
            dim,
            num_users,
            num_items,
            user_emb: vec![0.0; num_users * dim],
            item_emb: vec![0.0; num_items * dim],
            user_bias: vec![0.0; num_users],
            item_bias: vec![0.0; num_items],
            global_bias: 0.0,
        }
    }

    /// Embeddings drawn from N(0, 0.01^2), biases zero.
    pub fn init(num_users: usize, num_items: usize, dim: usize, seed: u64) -> Self {
        let mut params = Self::zeros(num_users, num_items, dim);
        let mut rng = domain_rng(seed, 0, b'I');
        let normal = Normal::new(0.0, 0.01).unwrap();
        for w in params.user_emb.iter_mut().chain(params.item_emb.iter_mut()) {
            *w = normal.sample(&mut rng);
        }
        params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn user_vec(&self, u: u32) -> &[f64] {
        &self.user_emb[u as usize * self.dim..(u as usize + 1) * self.dim]
    }

    pub fn item_vec(&self, i: u32) -> &[f64] {
        &self.item_emb[i as usize * self.dim..(i as usize + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.user_emb
            .iter()
            .chain(self.item_emb.iter())
            .chain(self.user_bias.iter())
            .chain(self.item_bias.iter())
            .chain(std::iter::once(&self.global_bias))
            .all(|x| x.is_finite())
    }
}

/// The biased dot product.
pub fn mf_forward(params: &MfParams, user: u32, item: u32) -> f64 {
    params.global_bias
        + params.user_bias[user as usize]
        + params.item_bias[item as usize]
        + dot(params.user_vec(user), params.item_vec(item))
}

/// Gradients of one example's loss with respect to the touched parameters.
#[derive(Debug, Clone)]
pub struct MfExampleGrads {
    pub d_user: Vec<f64>,
    pub d_item: Vec<f64>,
    pub d_user_bias: f64,
    pub d_item_bias: f64,
    pub d_global_bias: f64,
}

/// Loss and gradients of a single `(user, item, label)` example:
/// stabilized binary cross-entropy on the logistic of the score plus
/// `l2/2` times the squared norms of the touched parameters.
pub fn mf_example_gradients(
    params: &MfParams,
    user: u32,
    item: u32,
    label: f64,
    l2: f64,
) -> (f64, MfExampleGrads) {
    let s = mf_forward(params, user, item);
    let (bce, sigmoid) = stable_bce(s, label);
    let g = sigmoid - label;
    let p = params.user_vec(user);
    let q = params.item_vec(item);
    let bu = params.user_bias[user as usize];
    let bi = params.item_bias[item as usize];
    let bg = params.global_bias;
    let reg = 0.5
        * l2
        * (dot(p, p) + dot(q, q) + bu * bu + bi * bi + bg * bg);
    let d_user: Vec<f64> = p.iter().zip(q).map(|(pf, qf)| g * qf + l2 * pf).collect();
    let d_item: Vec<f64> = p.iter().zip(q).map(|(pf, qf)| g * pf + l2 * qf).collect();
    (
        bce + reg,
        MfExampleGrads {
            d_user,
            d_item,
            d_user_bias: g + l2 * bu,
            d_item_bias: g + l2 * bi,
            d_global_bias: g + l2 * bg,
        },
    )
}

/// Numerically stable `(bce_loss, sigmoid)` for a logit and 0/1 label.
pub(crate) fn stable_bce(s: f64, label: f64) -> (f64, f64) {
    if s >= 0.0 {
        let e = (-s).exp();
        let sigmoid = 1.0 / (1.0 + e);
        ((1.0 + e).ln() + (1.0 - label) * s, sigmoid)
    } else {
        let e = s.exp();
        let sigmoid = e / (1.0 + e);
        ((1.0 + e).ln() - label * s, sigmoid)
    }
}

/// Statistics of one finished epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub hr: f64,
    pub ndcg: f64,
}

/// Per-epoch metric trace plus the selected epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_hr: f64,
}

/// A trained MF scorer: selected parameters, config, and the full trace.
#[derive(Debug, Clone)]
pub struct MfModel {
    pub params: MfParams,
    pub config: TrainConfig,
    pub trace: TrainTrace,
}

/// Incremental trainer; `fit_mf` drives it to completion. Kept public so a
/// run can checkpoint after any epoch and resume bit-identically.
pub struct MfTrainer {
    current: MfParams,
    best: MfParams,
    trace: TrainTrace,
    config: TrainConfig,
    next_epoch: usize,
}

impl MfTrainer {
    pub fn new(pack: &EvaluationPack, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = MfParams::init(
            pack.train.num_users(),
            pack.train.num_items(),
            config.embedding_dim,
            config.seed,
        );
        Ok(MfTrainer {
            best: params.clone(),
            current: params,
            trace: TrainTrace::default(),
            config: config.clone(),
            next_epoch: 0,
        })
    }

    pub fn next_epoch(&self) -> usize {
        self.next_epoch
    }

    pub fn trace(&self) -> &TrainTrace {
        &self.trace
    }

    /// One SGD pass over freshly sampled examples, then HR@10 selection.
    /// Every epoch derives its RNG from `(seed, epoch)`, so resuming from a
    /// checkpoint replays the identical stream.
    pub fn run_epoch(&mut self, pack: &EvaluationPack) -> Result<EpochStats> {
        let epoch = self.next_epoch;
        let lr = self.config.learning_rate;
        let l2 = self.config.l2_reg;
        let mut rng = domain_rng(self.config.seed, epoch as u64, b'E');
        let examples = build_examples(
            pack,
            self.config.negatives_per_positive,
            &mut rng,
        )?;
        let mut total_loss = 0.0;
        let dim = self.current.dim;
        for &(u, i, label) in &examples {
            let s = mf_forward(&self.current, u, i);
            let (bce, sigmoid) = stable_bce(s, label);
            total_loss += bce;
            let g = sigmoid - label;
            let u0 = u as usize * dim;
            let i0 = i as usize * dim;
            for f in 0..dim {
                let pf = self.current.user_emb[u0 + f];
                let qf = self.current.item_emb[i0 + f];
                self.current.user_emb[u0 + f] = pf - lr * (g * qf + l2 * pf);
                self.current.item_emb[i0 + f] = qf - lr * (g * pf + l2 * qf);
            }
            let bu = self.current.user_bias[u as usize];
            self.current.user_bias[u as usize] = bu - lr * (g + l2 * bu);
            let bi = self.current.item_bias[i as usize];
            self.current.item_bias[i as usize] = bi - lr * (g + l2 * bi);
            let bg = self.current.global_bias;
            self.current.global_bias = bg - lr * (g + l2 * bg);
        }
        let mean_loss = total_loss / examples.len() as f64;
        if !mean_loss.is_finite() || !self.current.all_finite() {
            return Err(Error::Diverged {
                model: "mf".into(),
                epoch,
                learning_rate: lr,
            });
        }
        let params = &self.current;
        let (hr, ndcg) = hr_ndcg_with(
            |u, items| Ok(items.iter().map(|&i| mf_forward(params, u, i)).collect()),
            pack,
            SELECTION_CUTOFF,
        )?;
        let stats = EpochStats {
            epoch,
            mean_loss,
            hr,
            ndcg,
        };
        if self.trace.epochs.is_empty() || hr > self.trace.best_hr {
            self.trace.best_hr = hr;
            self.trace.best_epoch = epoch;
            self.best = self.current.clone();
        }
        self.trace.epochs.push(stats);
        self.next_epoch += 1;
        Ok(stats)
    }

    /// Parameters of the best epoch so far plus the trace.
    pub fn into_model(self) -> TrainedModel {
        TrainedModel::Mf(MfModel {
            params: self.best,
            config: self.config,
            trace: self.trace,
        })
    }

    /// Snapshot for checkpointing.
    pub fn state(&self) -> MfTrainerState {
        MfTrainerState {
            current: self.current.clone(),
            best: self.best.clone(),
            trace: self.trace.clone(),
            config: self.config.clone(),
            next_epoch: self.next_epoch,
        }
    }

    pub fn from_state(state: MfTrainerState) -> Self {
        MfTrainer {
            current: state.current,
            best: state.best,
            trace: state.trace,
            config: state.config,
            next_epoch: state.next_epoch,
        }
    }
}

/// Everything needed to resume training bit-identically.
#[derive(Debug, Clone)]
pub struct MfTrainerState {
    pub current: MfParams,
    pub best: MfParams,
    pub trace: TrainTrace,
    pub config: TrainConfig,
    pub next_epoch: usize,
}

/// Positives plus freshly sampled negatives, shuffled.
pub(crate) fn build_examples(
    pack: &EvaluationPack,
    negatives_per_positive: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<(u32, u32, f64)>> {
    let train = &pack.train;
    let mut examples = Vec::with_capacity(train.nnz() * (1 + negatives_per_positive));
    for u in 0..train.num_users() as u32 {
        let row = train.row(u);
        if row.is_empty() {
            continue;
        }
        for &i in row {
            examples.push((u, i, 1.0));
        }
        let negatives =
            sample_training_negatives(train, u, negatives_per_positive * row.len(), rng)?;
        for n in negatives {
            examples.push((u, n, 0.0));
        }
    }
    // Fisher-Yates shuffle driven by the epoch RNG.
    for idx in (1..examples.len()).rev() {
        let pick = rng.gen_range(0..=idx);
        examples.swap(idx, pick);
    }
    Ok(examples)
}

pub(crate) fn domain_rng(seed: u64, counter: u64, tag: u8) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&counter.to_le_bytes());
    key[16] = tag;
    ChaCha20Rng::from_seed(key)
}

/// Trains MF on the pack's train matrix and returns the parameters of the
/// epoch with the best HR@10.
pub fn fit_mf(pack: &EvaluationPack, config: &TrainConfig) -> Result<TrainedModel> {
    let mut trainer = MfTrainer::new(pack, config)?;
    for _ in 0..config.epochs {
        trainer.run_epoch(pack)?;
    }
    Ok(trainer.into_model())
}
