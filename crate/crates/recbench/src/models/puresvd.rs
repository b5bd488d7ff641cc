//! Truncated SVD of the binary interaction matrix.
//!
//! Uses the randomized range-finder: sample `factors + oversample` Gaussian
//! directions, optionally refine with power iterations, project, and take
//! the SVD of the small projected matrix. The score of `(u, t)` is the
//! projection `x_u . V . V'` evaluated at `t`.

use std::sync::Arc;

use nalgebra::{DMatrix, QR};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{PureSvdModel, TrainedModel};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

/// Singular values below `sigma_0 * RANK_TOLERANCE` are treated as rank
/// deficiency and truncated.
const RANK_TOLERANCE: f64 = 1e-10;

pub fn fit_puresvd(
    train: Arc<SparseInteractionMatrix>,
    factors: usize,
    seed: u64,
    oversample: usize,
    power_iters: usize,
) -> Result<TrainedModel> {
    let m = train.num_users();
    let n = train.num_items();
    if factors == 0 || factors > m.min(n) {
        return Err(Error::Contract(format!(
            "puresvd: factors must lie in [1, {}], got {factors}",
            m.min(n)
        )));
    }
    let sample = (factors + oversample).min(m.min(n));
    let mut rng = seed_rng(seed);
    let omega = gaussian_matrix(n, sample, &mut rng);

    // Range finder: Q spans the column space of X * Omega, refined by
    // power iterations with re-orthonormalization for stability.
    let y = sparse_times_dense(&train, &omega);
    let mut q = thin_q(y);
    for _ in 0..power_iters {
        let z = sparse_transpose_times_dense(&train, &q);
        let qz = thin_q(z);
        let y = sparse_times_dense(&train, &qz);
        q = thin_q(y);
    }

    // Project: B = Q' X  (sample x n), then SVD of the small B.
    let b = dense_transpose_times_sparse(&q, &train);
    let svd = b.svd(true, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical {
        model: "puresvd".into(),
        message: "projected SVD did not produce right singular vectors".into(),
    })?;
    let singular = svd.singular_values;

    // Effective rank: drop directions whose singular value has collapsed.
    let sigma0 = singular.max();
    let mut effective = 0;
    for i in 0..factors.min(singular.len()) {
        if singular[i] > sigma0 * RANK_TOLERANCE {
            effective += 1;
        }
    }
    let rank_truncated = effective < factors;
    if rank_truncated {
        log::warn!(
            "puresvd: requested {factors} factors but the matrix has effective rank {effective}; truncating"
        );
    }
    let f = effective.max(1);

    let mut item_factors = vec![0.0f64; n * f];
    for t in 0..n {
        for c in 0..f {
            item_factors[t * f + c] = v_t[(c, t)];
        }
    }
    let singular_values: Vec<f64> = (0..f).map(|i| singular[i]).collect();

    // Precompute user representations x_u . V.
    let mut user_reps = vec![0.0f64; m * f];
    for u in 0..m as u32 {
        let rep = &mut user_reps[u as usize * f..(u as usize + 1) * f];
        for &i in train.row(u) {
            let v = &item_factors[i as usize * f..(i as usize + 1) * f];
            for c in 0..f {
                rep[c] += v[c];
            }
        }
    }
    if user_reps.iter().chain(item_factors.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical {
            model: "puresvd".into(),
            message: "non-finite factors after fitting".into(),
        });
    }
    Ok(TrainedModel::PureSvd(PureSvdModel {
        user_reps,
        item_factors,
        singular_values,
        factors: f,
        num_users: m,
        num_items: n,
        rank_truncated,
    }))
}

fn seed_rng(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[12] = 0x51; // domain tag: svd range finder
    ChaCha20Rng::from_seed(key)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn sparse_times_dense(x: &SparseInteractionMatrix, d: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.num_users();
    let cols = d.ncols();
    let mut out = DMatrix::zeros(m, cols);
    for u in 0..m as u32 {
        for &i in x.row(u) {
            for c in 0..cols {
                out[(u as usize, c)] += d[(i as usize, c)];
            }
        }
    }
    out
}

fn sparse_transpose_times_dense(x: &SparseInteractionMatrix, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.num_items();
    let cols = d.ncols();
    let mut out = DMatrix::zeros(n, cols);
    for u in 0..x.num_users() as u32 {
        for &i in x.row(u) {
            for c in 0..cols {
                out[(i as usize, c)] += d[(u as usize, c)];
            }
        }
    }
    out
}

fn dense_transpose_times_sparse(q: &DMatrix<f64>, x: &SparseInteractionMatrix) -> DMatrix<f64> {
    let s = q.ncols();
    let n = x.num_items();
    let mut out = DMatrix::zeros(s, n);
    for u in 0..x.num_users() as u32 {
        for &i in x.row(u) {
            for c in 0..s {
                out[(c, i as usize)] += q[(u as usize, c)];
            }
        }
    }
    out
}

fn thin_q(y: DMatrix<f64>) -> DMatrix<f64> {
    let qr = QR::new(y);
    qr.q()
}
