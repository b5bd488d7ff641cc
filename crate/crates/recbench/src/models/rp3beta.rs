//! Popularity-penalized three-step random-walk recommender.
//!
//! The user-to-item and item-to-user transition matrices are row-normalized
//! and raised element-wise to `alpha`. The walk similarity from source item
//! `s` to target item `t` is then scaled by `1 / popularity(t)^beta` and the
//! strongest `top_k` sources are kept per target column.

use std::sync::Arc;

use rayon::prelude::*;

use super::{SparseItemItemModel, TrainedModel};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

pub fn fit_rp3beta(
    train: Arc<SparseInteractionMatrix>,
    alpha: f64,
    beta: f64,
    top_k: usize,
) -> Result<TrainedModel> {
    if beta < 0.0 {
        return Err(Error::Contract(format!(
            "rp3beta: beta must be >= 0, got {beta}"
        )));
    }
    if top_k == 0 {
        return Err(Error::Contract("rp3beta: top_k must be >= 1".into()));
    }
    let num_users = train.num_users();
    let num_items = train.num_items();
    let item_pop = train.item_counts();

    // Transition weights after row normalization and the alpha power. A user
    // or item without interactions keeps weight 0 and never contributes.
    let user_step: Vec<f64> = (0..num_users as u32)
        .map(|u| {
            let deg = train.row_len(u);
            if deg == 0 {
                0.0
            } else {
                (1.0 / deg as f64).powf(alpha)
            }
        })
        .collect();
    let item_step: Vec<f64> = item_pop
        .iter()
        .map(|&pop| {
            if pop == 0 {
                0.0
            } else {
                (1.0 / pop as f64).powf(alpha)
            }
        })
        .collect();
    let pop_penalty: Vec<f64> = item_pop
        .iter()
        .map(|&pop| {
            if pop == 0 {
                0.0
            } else {
                (pop as f64).powf(-beta)
            }
        })
        .collect();

    // Users that consumed each item, for walking item -> user.
    let mut item_users: Vec<Vec<u32>> = vec![Vec::new(); num_items];
    for u in 0..num_users as u32 {
        for &i in train.row(u) {
            item_users[i as usize].push(u);
        }
    }

    // Column t of W holds the walk mass arriving at t from each source item,
    // penalized by t's popularity. Columns are independent.
    let columns: Vec<Vec<(u32, f64)>> = (0..num_items as u32)
        .into_par_iter()
        .map(|target| {
            let penalty = pop_penalty[target as usize];
            if penalty == 0.0 {
                return Vec::new();
            }
            let mut mass = vec![0.0f64; num_items];
            for &u in &item_users[target as usize] {
                let through = user_step[u as usize];
                for &source in train.row(u) {
                    mass[source as usize] += item_step[source as usize] * through;
                }
            }
            mass[target as usize] = 0.0;
            let mut entries: Vec<(u32, f64)> = mass
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(s, &v)| (s as u32, v * penalty))
                .collect();
            if entries.len() > top_k {
                entries.select_nth_unstable_by(top_k - 1, |a, b| {
                    b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0))
                });
                entries.truncate(top_k);
            }
            entries.sort_unstable_by_key(|&(s, _)| s);
            entries
        })
        .collect();

    let mut col_offsets = Vec::with_capacity(num_items + 1);
    let mut sources = Vec::new();
    let mut weights = Vec::new();
    col_offsets.push(0);
    for column in columns {
        for (s, w) in column {
            sources.push(s);
            weights.push(w);
        }
        col_offsets.push(sources.len());
    }
    Ok(TrainedModel::Rp3Beta(SparseItemItemModel {
        col_offsets,
        sources,
        weights,
        num_items,
        train,
        nonnegative: true,
        unconverged_columns: Vec::new(),
    }))
}
