//! Sparse linear item model via nonnegative elastic-net regression.
//!
//! Each item column is regressed on the other columns:
//! `min_w 0.5*||X_t - X w||^2 + l1*||w||_1 + 0.5*l2*||w||^2` subject to
//! `w >= 0` and `w_t = 0`, solved by cyclic coordinate descent over the
//! `top_k` most co-occurring candidate neighbors.

use std::sync::Arc;

use rayon::prelude::*;

use super::{SparseItemItemModel, TrainedModel};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

pub fn fit_slim(
    train: Arc<SparseInteractionMatrix>,
    l1: f64,
    l2: f64,
    top_k: usize,
    max_iters: usize,
    tol: f64,
) -> Result<TrainedModel> {
    if l1 < 0.0 || l2 < 0.0 {
        return Err(Error::Contract(format!(
            "slim: l1 and l2 must be >= 0, got {l1}, {l2}"
        )));
    }
    if top_k == 0 || max_iters == 0 {
        return Err(Error::Contract(
            "slim: top_k and max_iters must be >= 1".into(),
        ));
    }
    let n = train.num_items();
    let gram = dense_gram(&train);

    let columns: Vec<(Vec<(u32, f64)>, bool)> = (0..n as u32)
        .into_par_iter()
        .map(|target| solve_column(&gram, n, target, l1, l2, top_k, max_iters, tol))
        .collect();

    let mut col_offsets = Vec::with_capacity(n + 1);
    let mut sources = Vec::new();
    let mut weights = Vec::new();
    let mut unconverged_columns = Vec::new();
    col_offsets.push(0);
    for (t, (column, converged)) in columns.into_iter().enumerate() {
        if !converged {
            unconverged_columns.push(t as u32);
        }
        for (s, w) in column {
            sources.push(s);
            weights.push(w);
        }
        col_offsets.push(sources.len());
    }
    if !unconverged_columns.is_empty() {
        log::warn!(
            "slim: {} of {n} columns hit the iteration cap",
            unconverged_columns.len()
        );
    }
    Ok(TrainedModel::Slim(SparseItemItemModel {
        col_offsets,
        sources,
        weights,
        num_items: n,
        train,
        nonnegative: true,
        unconverged_columns,
    }))
}

/// Cyclic nonnegative coordinate descent for one target column. Returns the
/// positive weights and whether the column converged within `max_iters`.
#[allow(clippy::too_many_arguments)]
fn solve_column(
    gram: &[f64],
    n: usize,
    target: u32,
    l1: f64,
    l2: f64,
    top_k: usize,
    max_iters: usize,
    tol: f64,
) -> (Vec<(u32, f64)>, bool) {
    let t = target as usize;
    let gram_t = &gram[t * n..(t + 1) * n];
    // Candidate neighbors: the top_k items by co-occurrence with the target,
    // ties towards the smaller id.
    let mut candidates: Vec<u32> = (0..n as u32)
        .filter(|&s| s != target && gram_t[s as usize] > 0.0)
        .collect();
    if candidates.len() > top_k {
        candidates.select_nth_unstable_by(top_k - 1, |&a, &b| {
            gram_t[b as usize]
                .partial_cmp(&gram_t[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        candidates.truncate(top_k);
    }
    candidates.sort_unstable();
    let k = candidates.len();
    if k == 0 {
        return (Vec::new(), true);
    }

    // Gather the candidate block of the Gram matrix for cache locality.
    let mut sub = vec![0.0f64; k * k];
    for (a, &ca) in candidates.iter().enumerate() {
        let row = &gram[ca as usize * n..(ca as usize + 1) * n];
        for (b, &cb) in candidates.iter().enumerate() {
            sub[a * k + b] = row[cb as usize];
        }
    }
    let c: Vec<f64> = candidates.iter().map(|&s| gram_t[s as usize]).collect();

    let mut w = vec![0.0f64; k];
    let mut gw = vec![0.0f64; k]; // running Gram * w over the candidate block
    let mut converged = false;
    for _iter in 0..max_iters {
        let mut max_change = 0.0f64;
        for i in 0..k {
            let gii = sub[i * k + i];
            if gii + l2 <= 0.0 {
                continue;
            }
            let residual = c[i] - (gw[i] - gii * w[i]);
            let updated = ((residual - l1) / (gii + l2)).max(0.0);
            let delta = updated - w[i];
            if delta != 0.0 {
                w[i] = updated;
                let col = &sub[i * k..(i + 1) * k];
                for (j, gj) in gw.iter_mut().enumerate() {
                    *gj += delta * col[j];
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }
    let column: Vec<(u32, f64)> = candidates
        .iter()
        .zip(&w)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&s, &w)| (s, w))
        .collect();
    (column, converged)
}

/// Dense item-item co-occurrence Gram matrix `X'X` (exact counts).
fn dense_gram(train: &SparseInteractionMatrix) -> Vec<f64> {
    let n = train.num_items();
    let mut gram = vec![0.0f64; n * n];
    for user in 0..train.num_users() as u32 {
        let row = train.row(user);
        for (a_pos, &a) in row.iter().enumerate() {
            let a = a as usize;
            gram[a * n + a] += 1.0;
            for &b in &row[a_pos + 1..] {
                let b = b as usize;
                gram[a * n + b] += 1.0;
                gram[b * n + a] += 1.0;
            }
        }
    }
    gram
}
