//! Closed-form item-item linear autoencoder.
//!
//! Fits `W` from the regularized Gram matrix in one shot:
//! `G = X'X + l2*I`, `P = G^-1`, `W[s][t] = -P[s][t] / P[t][t]` off the
//! diagonal and `W[t][t] = 0`. Scores are `x_u . W`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{DenseItemItemModel, TrainedModel};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

/// Closed-form fit; `l2 > 0` keeps the Gram matrix positive definite.
pub fn fit_ease(train: Arc<SparseInteractionMatrix>, l2: f64) -> Result<TrainedModel> {
    if l2 <= 0.0 {
        return Err(Error::Contract(format!("ease: l2 must be > 0, got {l2}")));
    }
    let n = train.num_items();
    let mut gram = gram_matrix(&train);
    for t in 0..n {
        gram[(t, t)] += l2;
    }
    let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| Error::Numerical {
        model: "ease".into(),
        message: "regularized Gram matrix is not positive definite".into(),
    })?;
    let p = chol.inverse();

    let mut weights = vec![0.0f64; n * n];
    for s in 0..n {
        for t in 0..n {
            if s != t {
                weights[s * n + t] = -p[(s, t)] / p[(t, t)];
            }
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical {
            model: "ease".into(),
            message: "non-finite weights after the linear solve".into(),
        });
    }
    Ok(TrainedModel::Ease(DenseItemItemModel {
        weights,
        num_items: n,
        train,
        l2,
    }))
}

/// Dense `X'X` accumulated in exact integer arithmetic (counts fit f64).
fn gram_matrix(train: &SparseInteractionMatrix) -> DMatrix<f64> {
    let n = train.num_items();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for user in 0..train.num_users() as u32 {
        let row = train.row(user);
        for (a_pos, &a) in row.iter().enumerate() {
            let a = a as usize;
            gram[(a, a)] += 1.0;
            for &b in &row[a_pos + 1..] {
                let b = b as usize;
                gram[(a, b)] += 1.0;
                gram[(b, a)] += 1.0;
            }
        }
    }
    gram
}
