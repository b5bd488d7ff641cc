//! Neural collaborative filtering: GMF and MLP branches fused under a
//! single prediction layer, trained with minibatch Adam on binary
//! cross-entropy and sampled negatives, without pretraining.
//!
//! For predictive factors `f` the GMF side uses `f`-dimensional embeddings
//! and the MLP side `2f`-dimensional ones (total embedding budget `3f`).
//! The MLP tower maps the concatenated `4f` input through ReLU layers of
//! sizes `2f` and `f`; the output layer weighs the concatenated `[mlp, gmf]`
//! representation and squashes through the logistic, so forward values lie
//! strictly in (0, 1).

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::mf::{build_examples, domain_rng, stable_bce, EpochStats, TrainConfig, TrainTrace};
use super::TrainedModel;
use crate::data::EvaluationPack;
use crate::eval::hr_ndcg_with;
use crate::{Error, Result};

const SELECTION_CUTOFF: usize = 10;

/// All learnable tensors of the fused model.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuMfParams {
    factors: usize,
    num_users: usize,
    num_items: usize,
    /// `num_users x f` and `num_items x f`.
    pub gmf_user: Vec<f64>,
    pub gmf_item: Vec<f64>,
    /// `num_users x 2f` and `num_items x 2f`.
    pub mlp_user: Vec<f64>,
    pub mlp_item: Vec<f64>,
    /// First tower layer `2f x 4f` (row-major, output by input) and bias.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Second tower layer `f x 2f` and bias.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// Prediction weights over `[mlp (f), gmf (f)]`.
    pub output: Vec<f64>,
}

impl NeuMfParams {
    pub fn zeros(num_users: usize, num_items: usize, factors: usize) -> Self {
        let f = factors;
        NeuMfParams {
            factors: f,
            num_users,
            num_items,
            gmf_user: vec![0.0; num_users * f],
            gmf_item: vec![0.0; num_items * f],
            mlp_user: vec![0.0; num_users * 2 * f],
            mlp_item: vec![0.0; num_items * 2 * f],
            w1: vec![0.0; 2 * f * 4 * f],
            b1: vec![0.0; 2 * f],
            w2: vec![0.0; f * 2 * f],
            b2: vec![0.0; f],
            output: vec![0.0; 2 * f],
        }
    }

    /// Embeddings from N(0, 0.01^2); layer weights fan-scaled uniform;
    /// biases zero.
    pub fn init(num_users: usize, num_items: usize, factors: usize, seed: u64) -> Self {
        let mut params = Self::zeros(num_users, num_items, factors);
        let mut rng = domain_rng(seed, 0, b'N');
        let normal = Normal::new(0.0, 0.01).unwrap();
        for w in params
            .gmf_user
            .iter_mut()
            .chain(params.gmf_item.iter_mut())
            .chain(params.mlp_user.iter_mut())
            .chain(params.mlp_item.iter_mut())
        {
            *w = normal.sample(&mut rng);
        }
        let f = factors;
        glorot_uniform(&mut params.w1, 4 * f, 2 * f, &mut rng);
        glorot_uniform(&mut params.w2, 2 * f, f, &mut rng);
        glorot_uniform(&mut params.output, 2 * f, 1, &mut rng);
        params
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    fn gmf_user_vec(&self, u: u32) -> &[f64] {
        &self.gmf_user[u as usize * self.factors..(u as usize + 1) * self.factors]
    }

    fn gmf_item_vec(&self, i: u32) -> &[f64] {
        &self.gmf_item[i as usize * self.factors..(i as usize + 1) * self.factors]
    }

    fn mlp_user_vec(&self, u: u32) -> &[f64] {
        let d = 2 * self.factors;
        &self.mlp_user[u as usize * d..(u as usize + 1) * d]
    }

    fn mlp_item_vec(&self, i: u32) -> &[f64] {
        let d = 2 * self.factors;
        &self.mlp_item[i as usize * d..(i as usize + 1) * d]
    }

    pub fn all_finite(&self) -> bool {
        self.tensor_refs().into_iter().flatten().all(|x| x.is_finite())
    }

    fn tensor_refs(&self) -> Vec<&[f64]> {
        vec![
            &self.gmf_user,
            &self.gmf_item,
            &self.mlp_user,
            &self.mlp_item,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.output,
        ]
    }
}

fn glorot_uniform(weights: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut ChaCha20Rng) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in weights {
        *w = rng.gen_range(-bound..bound);
    }
}

/// Element-wise product of the GMF embeddings.
pub fn gmf_forward(params: &NeuMfParams, user: u32, item: u32) -> Vec<f64> {
    params
        .gmf_user_vec(user)
        .iter()
        .zip(params.gmf_item_vec(item))
        .map(|(p, q)| p * q)
        .collect()
}

/// The MLP tower applied to the concatenated embeddings.
pub fn mlp_forward(params: &NeuMfParams, user: u32, item: u32) -> Vec<f64> {
    forward_pass(params, user, item).a2
}

/// Logistic fusion score in (0, 1).
pub fn neumf_forward(params: &NeuMfParams, user: u32, item: u32) -> f64 {
    let cache = forward_pass(params, user, item);
    1.0 / (1.0 + (-cache.logit).exp())
}

struct ForwardCache {
    z0: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    gmf: Vec<f64>,
    logit: f64,
}

fn forward_pass(params: &NeuMfParams, user: u32, item: u32) -> ForwardCache {
    let f = params.factors;
    let mut z0 = Vec::with_capacity(4 * f);
    z0.extend_from_slice(params.mlp_user_vec(user));
    z0.extend_from_slice(params.mlp_item_vec(item));
    let z1 = affine(&params.w1, &params.b1, &z0);
    let a1: Vec<f64> = z1.iter().map(|&x| x.max(0.0)).collect();
    let z2 = affine(&params.w2, &params.b2, &a1);
    let a2: Vec<f64> = z2.iter().map(|&x| x.max(0.0)).collect();
    let gmf = gmf_forward(params, user, item);
    let mut logit = 0.0;
    for (j, &a) in a2.iter().enumerate() {
        logit += params.output[j] * a;
    }
    for (j, &g) in gmf.iter().enumerate() {
        logit += params.output[f + j] * g;
    }
    ForwardCache {
        z0,
        z1,
        a1,
        z2,
        a2,
        gmf,
        logit,
    }
}

fn affine(weights: &[f64], bias: &[f64], input: &[f64]) -> Vec<f64> {
    let in_dim = input.len();
    let mut out = bias.to_vec();
    for (o, slot) in out.iter_mut().enumerate() {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        for (w, x) in row.iter().zip(input) {
            *slot += w * x;
        }
    }
    out
}

/// Gradients of one batch, with embedding rows kept sparse.
#[derive(Debug, Clone, Default)]
pub struct NeuMfBatchGrads {
    pub gmf_user: BTreeMap<u32, Vec<f64>>,
    pub gmf_item: BTreeMap<u32, Vec<f64>>,
    pub mlp_user: BTreeMap<u32, Vec<f64>>,
    pub mlp_item: BTreeMap<u32, Vec<f64>>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub output: Vec<f64>,
}

/// Mean loss of a batch under the exact objective the trainer optimizes:
/// mean BCE plus `l2/2` times (per-example touched embedding norms, averaged,
/// plus the dense layer norms once).
pub fn neumf_batch_loss(params: &NeuMfParams, batch: &[(u32, u32, f64)], l2: f64) -> f64 {
    let inv = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &(u, i, y) in batch {
        let cache = forward_pass(params, u, i);
        let (bce, _) = stable_bce(cache.logit, y);
        loss += bce;
        if l2 > 0.0 {
            let reg: f64 = sq(params.gmf_user_vec(u))
                + sq(params.gmf_item_vec(i))
                + sq(params.mlp_user_vec(u))
                + sq(params.mlp_item_vec(i));
            loss += 0.5 * l2 * reg;
        }
    }
    let mut total = loss * inv;
    if l2 > 0.0 {
        let dense = sq(&params.w1) + sq(&params.b1) + sq(&params.w2) + sq(&params.b2)
            + sq(&params.output);
        total += 0.5 * l2 * dense;
    }
    total
}

fn sq(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

/// Backpropagation over one batch; returns `(mean bce, grads)` where the
/// grads differentiate exactly [`neumf_batch_loss`].
pub fn neumf_batch_gradients(
    params: &NeuMfParams,
    batch: &[(u32, u32, f64)],
    l2: f64,
) -> (f64, NeuMfBatchGrads) {
    let f = params.factors;
    let inv = 1.0 / batch.len() as f64;
    let mut grads = NeuMfBatchGrads {
        w1: vec![0.0; params.w1.len()],
        b1: vec![0.0; params.b1.len()],
        w2: vec![0.0; params.w2.len()],
        b2: vec![0.0; params.b2.len()],
        output: vec![0.0; params.output.len()],
        ..Default::default()
    };
    let mut mean_bce = 0.0;
    for &(u, i, y) in batch {
        let cache = forward_pass(params, u, i);
        let (bce, sigmoid) = stable_bce(cache.logit, y);
        mean_bce += bce * inv;
        let g = (sigmoid - y) * inv;

        for (j, &a) in cache.a2.iter().enumerate() {
            grads.output[j] += g * a;
        }
        for (j, &v) in cache.gmf.iter().enumerate() {
            grads.output[f + j] += g * v;
        }

        // GMF branch
        let gu = grads
            .gmf_user
            .entry(u)
            .or_insert_with(|| vec![0.0; f]);
        let q = params.gmf_item_vec(i);
        for j in 0..f {
            gu[j] += g * params.output[f + j] * q[j];
        }
        let gi = grads
            .gmf_item
            .entry(i)
            .or_insert_with(|| vec![0.0; f]);
        let p = params.gmf_user_vec(u);
        for j in 0..f {
            gi[j] += g * params.output[f + j] * p[j];
        }

        // MLP branch
        let d_z2: Vec<f64> = (0..f)
            .map(|j| {
                if cache.z2[j] > 0.0 {
                    g * params.output[j]
                } else {
                    0.0
                }
            })
            .collect();
        for (o, &dz) in d_z2.iter().enumerate() {
            grads.b2[o] += dz;
            let row = &mut grads.w2[o * 2 * f..(o + 1) * 2 * f];
            for (j, &a) in cache.a1.iter().enumerate() {
                row[j] += dz * a;
            }
        }
        let mut d_a1 = vec![0.0; 2 * f];
        for (o, &dz) in d_z2.iter().enumerate() {
            if dz == 0.0 {
                continue;
            }
            let row = &params.w2[o * 2 * f..(o + 1) * 2 * f];
            for (j, slot) in d_a1.iter_mut().enumerate() {
                *slot += dz * row[j];
            }
        }
        let d_z1: Vec<f64> = d_a1
            .iter()
            .enumerate()
            .map(|(j, &d)| if cache.z1[j] > 0.0 { d } else { 0.0 })
            .collect();
        for (o, &dz) in d_z1.iter().enumerate() {
            grads.b1[o] += dz;
            let row = &mut grads.w1[o * 4 * f..(o + 1) * 4 * f];
            for (j, &x) in cache.z0.iter().enumerate() {
                row[j] += dz * x;
            }
        }
        let mut d_z0 = vec![0.0; 4 * f];
        for (o, &dz) in d_z1.iter().enumerate() {
            if dz == 0.0 {
                continue;
            }
            let row = &params.w1[o * 4 * f..(o + 1) * 4 * f];
            for (j, slot) in d_z0.iter_mut().enumerate() {
                *slot += dz * row[j];
            }
        }
        let mu = grads
            .mlp_user
            .entry(u)
            .or_insert_with(|| vec![0.0; 2 * f]);
        for j in 0..2 * f {
            mu[j] += d_z0[j];
        }
        let mi = grads
            .mlp_item
            .entry(i)
            .or_insert_with(|| vec![0.0; 2 * f]);
        for j in 0..2 * f {
            mi[j] += d_z0[2 * f + j];
        }

        if l2 > 0.0 {
            let reg = l2 * inv;
            let gu = grads.gmf_user.get_mut(&u).unwrap();
            for (j, &v) in params.gmf_user_vec(u).iter().enumerate() {
                gu[j] += reg * v;
            }
            let gi = grads.gmf_item.get_mut(&i).unwrap();
            for (j, &v) in params.gmf_item_vec(i).iter().enumerate() {
                gi[j] += reg * v;
            }
            let mu = grads.mlp_user.get_mut(&u).unwrap();
            for (j, &v) in params.mlp_user_vec(u).iter().enumerate() {
                mu[j] += reg * v;
            }
            let mi = grads.mlp_item.get_mut(&i).unwrap();
            for (j, &v) in params.mlp_item_vec(i).iter().enumerate() {
                mi[j] += reg * v;
            }
        }
    }
    if l2 > 0.0 {
        for (g, w) in grads.w1.iter_mut().zip(&params.w1) {
            *g += l2 * w;
        }
        for (g, w) in grads.b1.iter_mut().zip(&params.b1) {
            *g += l2 * w;
        }
        for (g, w) in grads.w2.iter_mut().zip(&params.w2) {
            *g += l2 * w;
        }
        for (g, w) in grads.b2.iter_mut().zip(&params.b2) {
            *g += l2 * w;
        }
        for (g, w) in grads.output.iter_mut().zip(&params.output) {
            *g += l2 * w;
        }
    }
    (mean_bce, grads)
}

/// First and second moment estimates for one tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamTensor {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamTensor {
    fn new(len: usize) -> Self {
        AdamTensor {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// Adam optimizer state. Embedding rows are updated lazily: only the rows a
/// batch touches have their moments advanced, with bias correction driven by
/// the global step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub gmf_user: AdamTensor,
    pub gmf_item: AdamTensor,
    pub mlp_user: AdamTensor,
    pub mlp_item: AdamTensor,
    pub w1: AdamTensor,
    pub b1: AdamTensor,
    pub w2: AdamTensor,
    pub b2: AdamTensor,
    pub output: AdamTensor,
    pub step: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    fn new(params: &NeuMfParams) -> Self {
        AdamState {
            gmf_user: AdamTensor::new(params.gmf_user.len()),
            gmf_item: AdamTensor::new(params.gmf_item.len()),
            mlp_user: AdamTensor::new(params.mlp_user.len()),
            mlp_item: AdamTensor::new(params.mlp_item.len()),
            w1: AdamTensor::new(params.w1.len()),
            b1: AdamTensor::new(params.b1.len()),
            w2: AdamTensor::new(params.w2.len()),
            b2: AdamTensor::new(params.b2.len()),
            output: AdamTensor::new(params.output.len()),
            step: 0,
        }
    }

    fn correction(&self) -> (f64, f64) {
        let t = self.step as f64;
        (1.0 - ADAM_BETA1.powf(t), 1.0 - ADAM_BETA2.powf(t))
    }
}

fn adam_update_dense(
    params: &mut [f64],
    state: &mut AdamTensor,
    grads: &[f64],
    lr: f64,
    c1: f64,
    c2: f64,
) {
    for j in 0..params.len() {
        let g = grads[j];
        state.m[j] = ADAM_BETA1 * state.m[j] + (1.0 - ADAM_BETA1) * g;
        state.v[j] = ADAM_BETA2 * state.v[j] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[j] / c1;
        let v_hat = state.v[j] / c2;
        params[j] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

fn adam_update_rows(
    params: &mut [f64],
    state: &mut AdamTensor,
    rows: &BTreeMap<u32, Vec<f64>>,
    width: usize,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    for (&row, grad) in rows {
        let base = row as usize * width;
        for (j, &g) in grad.iter().enumerate().take(width) {
            let idx = base + j;
            state.m[idx] = ADAM_BETA1 * state.m[idx] + (1.0 - ADAM_BETA1) * g;
            state.v[idx] = ADAM_BETA2 * state.v[idx] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = state.m[idx] / c1;
            let v_hat = state.v[idx] / c2;
            params[idx] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// A trained NeuMF scorer.
#[derive(Debug, Clone)]
pub struct NeuMfModel {
    pub params: NeuMfParams,
    pub config: TrainConfig,
    pub trace: TrainTrace,
}

/// Incremental trainer with checkpointable state.
pub struct NeuMfTrainer {
    current: NeuMfParams,
    best: NeuMfParams,
    adam: AdamState,
    trace: TrainTrace,
    config: TrainConfig,
    next_epoch: usize,
}

impl NeuMfTrainer {
    pub fn new(pack: &EvaluationPack, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = NeuMfParams::init(
            pack.train.num_users(),
            pack.train.num_items(),
            config.embedding_dim,
            config.seed,
        );
        Ok(NeuMfTrainer {
            best: params.clone(),
            adam: AdamState::new(&params),
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

    /// One pass of minibatch Adam over freshly sampled examples, then HR@10
    /// selection. The epoch RNG derives from `(seed, epoch)` so resuming a
    /// checkpoint replays the identical stream.
    pub fn run_epoch(&mut self, pack: &EvaluationPack) -> Result<EpochStats> {
        let epoch = self.next_epoch;
        let lr = self.config.learning_rate;
        let l2 = self.config.l2_reg;
        let mut rng = domain_rng(self.config.seed, epoch as u64, b'F');
        let examples = build_examples(pack, self.config.negatives_per_positive, &mut rng)?;
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in examples.chunks(self.config.batch_size) {
            let (mean_bce, grads) = neumf_batch_gradients(&self.current, batch, l2);
            loss_sum += mean_bce;
            batches += 1;
            self.adam.step += 1;
            let (c1, c2) = self.adam.correction();
            let f = self.current.factors;
            adam_update_rows(
                &mut self.current.gmf_user,
                &mut self.adam.gmf_user,
                &grads.gmf_user,
                f,
                lr,
                c1,
                c2,
            );
            adam_update_rows(
                &mut self.current.gmf_item,
                &mut self.adam.gmf_item,
                &grads.gmf_item,
                f,
                lr,
                c1,
                c2,
            );
            adam_update_rows(
                &mut self.current.mlp_user,
                &mut self.adam.mlp_user,
                &grads.mlp_user,
                2 * f,
                lr,
                c1,
                c2,
            );
            adam_update_rows(
                &mut self.current.mlp_item,
                &mut self.adam.mlp_item,
                &grads.mlp_item,
                2 * f,
                lr,
                c1,
                c2,
            );
            adam_update_dense(&mut self.current.w1, &mut self.adam.w1, &grads.w1, lr, c1, c2);
            adam_update_dense(&mut self.current.b1, &mut self.adam.b1, &grads.b1, lr, c1, c2);
            adam_update_dense(&mut self.current.w2, &mut self.adam.w2, &grads.w2, lr, c1, c2);
            adam_update_dense(&mut self.current.b2, &mut self.adam.b2, &grads.b2, lr, c1, c2);
            adam_update_dense(
                &mut self.current.output,
                &mut self.adam.output,
                &grads.output,
                lr,
                c1,
                c2,
            );
        }
        let mean_loss = loss_sum / batches.max(1) as f64;
        if !mean_loss.is_finite() || !self.current.all_finite() {
            return Err(Error::Diverged {
                model: "neumf".into(),
                epoch,
                learning_rate: lr,
            });
        }
        let params = &self.current;
        let (hr, ndcg) = hr_ndcg_with(
            |u, items| {
                Ok(items
                    .iter()
                    .map(|&i| neumf_forward(params, u, i))
                    .collect())
            },
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

    pub fn into_model(self) -> TrainedModel {
        TrainedModel::NeuMf(NeuMfModel {
            params: self.best,
            config: self.config,
            trace: self.trace,
        })
    }

    pub fn state(&self) -> NeuMfTrainerState {
        NeuMfTrainerState {
            current: self.current.clone(),
            best: self.best.clone(),
            adam: self.adam.clone(),
            trace: self.trace.clone(),
            config: self.config.clone(),
            next_epoch: self.next_epoch,
        }
    }

    pub fn from_state(state: NeuMfTrainerState) -> Self {
        NeuMfTrainer {
            current: state.current,
            best: state.best,
            adam: state.adam,
            trace: state.trace,
            config: state.config,
            next_epoch: state.next_epoch,
        }
    }
}

/// Everything needed to resume training bit-identically.
#[derive(Debug, Clone)]
pub struct NeuMfTrainerState {
    pub current: NeuMfParams,
    pub best: NeuMfParams,
    pub adam: AdamState,
    pub trace: TrainTrace,
    pub config: TrainConfig,
    pub next_epoch: usize,
}

/// Trains NeuMF without pretraining and returns the parameters of the epoch
/// with the best HR@10.
pub fn fit_neumf(pack: &EvaluationPack, config: &TrainConfig) -> Result<TrainedModel> {
    let mut trainer = NeuMfTrainer::new(pack, config)?;
    for _ in 0..config.epochs {
        trainer.run_epoch(pack)?;
    }
    Ok(trainer.into_model())
}
