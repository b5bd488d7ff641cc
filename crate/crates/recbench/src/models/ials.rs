//! Implicit-feedback alternating least squares.
//!
//! Observed cells get confidence `1 + alpha` towards preference 1, all other
//! cells confidence 1 towards preference 0. Each half-sweep solves the
//! regularized normal equations of one side in closed form, so the weighted
//! objective is non-increasing across half-sweeps; the trace is recorded and
//! asserted.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::{dot, FactorModel, TrainedModel};
use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

const SOLVE_RESIDUAL_TOLERANCE: f64 = 1e-6;

pub fn fit_ials(
    train: Arc<SparseInteractionMatrix>,
    factors: usize,
    reg: f64,
    alpha: f64,
    epochs: usize,
    seed: u64,
) -> Result<TrainedModel> {
    if reg <= 0.0 {
        return Err(Error::Contract(format!("ials: reg must be > 0, got {reg}")));
    }
    if epochs == 0 {
        return Err(Error::Contract("ials: epochs must be >= 1".into()));
    }
    if factors == 0 {
        return Err(Error::Contract("ials: factors must be >= 1".into()));
    }
    let m = train.num_users();
    let n = train.num_items();

    let mut rng = seed_rng(seed);
    // Item factors start small and random; user factors are solved first.
    let mut item_factors: Vec<f64> = (0..n * factors)
        .map(|_| (rng.gen::<f64>() - 0.5) * 0.1)
        .collect();
    let mut user_factors = vec![0.0f64; m * factors];

    // Item rows of the transposed matrix, for the item-side half-sweep.
    let mut item_users: Vec<Vec<u32>> = vec![Vec::new(); n];
    for u in 0..m as u32 {
        for &i in train.row(u) {
            item_users[i as usize].push(u);
        }
    }

    let mut objective_trace = Vec::with_capacity(2 * epochs);
    for _epoch in 0..epochs {
        solve_side(
            &mut user_factors,
            &item_factors,
            factors,
            reg,
            alpha,
            |u| train.row(u),
            m,
        )?;
        objective_trace.push(objective(
            &train,
            &user_factors,
            &item_factors,
            factors,
            reg,
            alpha,
        ));
        solve_side(
            &mut item_factors,
            &user_factors,
            factors,
            reg,
            alpha,
            |i| &item_users[i as usize],
            n,
        )?;
        objective_trace.push(objective(
            &train,
            &user_factors,
            &item_factors,
            factors,
            reg,
            alpha,
        ));
    }
    for window in objective_trace.windows(2) {
        if window[1] > window[0] + 1e-9 * window[0].abs().max(1.0) {
            return Err(Error::Numerical {
                model: "ials".into(),
                message: format!(
                    "objective increased across a half-sweep: {} -> {}",
                    window[0], window[1]
                ),
            });
        }
    }
    if user_factors
        .iter()
        .chain(item_factors.iter())
        .any(|x| !x.is_finite())
    {
        return Err(Error::Numerical {
            model: "ials".into(),
            message: "non-finite factors after fitting".into(),
        });
    }
    Ok(TrainedModel::Ials(FactorModel {
        user_factors,
        item_factors,
        factors,
        num_users: m,
        num_items: n,
        objective_trace,
    }))
}

fn seed_rng(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[12] = 0x1a; // domain tag: ials init
    ChaCha20Rng::from_seed(key)
}

/// Solves one side's rows in closed form given the other side fixed. Rows
/// are independent, so the parallel loop writes disjoint slots and the
/// result is identical to the sequential order.
fn solve_side<'a, F>(
    side: &mut [f64],
    other: &[f64],
    factors: usize,
    reg: f64,
    alpha: f64,
    observed: F,
    rows: usize,
) -> Result<()>
where
    F: Fn(u32) -> &'a [u32] + Sync,
{
    // Gram of the fixed side, shared by every row solve.
    let mut gram = DMatrix::<f64>::zeros(factors, factors);
    for r in 0..other.len() / factors {
        let v = &other[r * factors..(r + 1) * factors];
        for a in 0..factors {
            for b in 0..factors {
                gram[(a, b)] += v[a] * v[b];
            }
        }
    }
    let results: Result<Vec<Vec<f64>>> = (0..rows as u32)
        .into_par_iter()
        .map(|row| {
            let obs = observed(row);
            let mut a = gram.clone();
            for f in 0..factors {
                a[(f, f)] += reg;
            }
            let mut b = DVector::<f64>::zeros(factors);
            for &o in obs {
                let v = &other[o as usize * factors..(o as usize + 1) * factors];
                for fa in 0..factors {
                    b[fa] += (1.0 + alpha) * v[fa];
                    for fb in 0..factors {
                        a[(fa, fb)] += alpha * v[fa] * v[fb];
                    }
                }
            }
            let chol = Cholesky::new(a.clone()).ok_or_else(|| Error::Numerical {
                model: "ials".into(),
                message: format!("normal equations not positive definite for row {row}"),
            })?;
            let x = chol.solve(&b);
            let residual = (&a * &x - &b).norm() / (1.0 + b.norm());
            if residual > SOLVE_RESIDUAL_TOLERANCE {
                return Err(Error::Numerical {
                    model: "ials".into(),
                    message: format!("solve residual {residual} for row {row}"),
                });
            }
            Ok(x.iter().cloned().collect())
        })
        .collect();
    for (row, x) in results?.into_iter().enumerate() {
        side[row * factors..(row + 1) * factors].copy_from_slice(&x);
    }
    Ok(())
}

/// Full weighted regularized objective:
/// `sum_{u,i} c_ui (p_ui - x_u . y_i)^2 + reg (||X||^2 + ||Y||^2)` with
/// `c = 1 + alpha` and `p = 1` on observed cells, `c = 1`, `p = 0` elsewhere.
/// The all-cells term is folded through the item Gram matrix.
fn objective(
    train: &SparseInteractionMatrix,
    user_factors: &[f64],
    item_factors: &[f64],
    factors: usize,
    reg: f64,
    alpha: f64,
) -> f64 {
    let n = train.num_items();
    let mut gram = vec![0.0f64; factors * factors];
    for i in 0..n {
        let y = &item_factors[i * factors..(i + 1) * factors];
        for a in 0..factors {
            for b in 0..factors {
                gram[a * factors + b] += y[a] * y[b];
            }
        }
    }
    let mut total = 0.0;
    for u in 0..train.num_users() as u32 {
        let x = &user_factors[u as usize * factors..(u as usize + 1) * factors];
        // sum over all items of (x.y)^2 via the Gram matrix
        let mut quad = 0.0;
        for a in 0..factors {
            for b in 0..factors {
                quad += x[a] * gram[a * factors + b] * x[b];
            }
        }
        total += quad;
        for &i in train.row(u) {
            let y = &item_factors[i as usize * factors..(i as usize + 1) * factors];
            let s = dot(x, y);
            // replace the background (s - 0)^2 by the observed-cell term
            total += (1.0 + alpha) * (1.0 - s) * (1.0 - s) - s * s;
        }
    }
    let reg_term: f64 = user_factors.iter().map(|x| x * x).sum::<f64>()
        + item_factors.iter().map(|x| x * x).sum::<f64>();
    total + reg * reg_term
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn train(rows: Vec<Vec<u32>>, num_items: usize) -> Arc<SparseInteractionMatrix> {
        let rows_len = rows.len();
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|i| (i, 1.0)).collect())
            .collect();
        Arc::new(SparseInteractionMatrix::from_rows(rows, rows_len, num_items).unwrap())
    }

    #[test]
    fn scalar_fixed_point_satisfies_both_normal_equations() {
        // One user, one item, one interaction, one factor. At convergence:
        // x ((1+a) y^2 + reg) = (1+a) y  and  y ((1+a) x^2 + reg) = (1+a) x.
        let t = train(vec![vec![0]], 1);
        let (reg, alpha) = (0.1, 2.0);
        let model = fit_ials(t, 1, reg, alpha, 200, 3).unwrap();
        let TrainedModel::Ials(m) = &model else {
            panic!()
        };
        let (x, y) = (m.user_factors[0], m.item_factors[0]);
        let r1 = x * ((1.0 + alpha) * y * y + reg) - (1.0 + alpha) * y;
        let r2 = y * ((1.0 + alpha) * x * x + reg) - (1.0 + alpha) * x;
        assert!(r1.abs() < 1e-8, "user equation residual {r1}");
        assert!(r2.abs() < 1e-8, "item equation residual {r2}");
    }

    #[test]
    fn objective_is_monotone_nonincreasing() {
        let rows = vec![
            vec![0, 1, 4],
            vec![2, 3],
            vec![0, 2, 5, 7],
            vec![1, 6],
            vec![3, 4, 5],
            vec![0, 6, 7],
            vec![1, 2, 3],
            vec![5, 6],
            vec![0, 4, 7],
            vec![2, 6],
        ];
        let model = fit_ials(train(rows, 8), 3, 0.05, 10.0, 6, 11).unwrap();
        let TrainedModel::Ials(m) = &model else {
            panic!()
        };
        assert_eq!(m.objective_trace.len(), 12);
        for w in m.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "objective rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let rows = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
        let a = fit_ials(train(rows.clone(), 3), 2, 0.1, 5.0, 3, 42).unwrap();
        let b = fit_ials(train(rows, 3), 2, 0.1, 5.0, 3, 42).unwrap();
        let (TrainedModel::Ials(a), TrainedModel::Ials(b)) = (&a, &b) else {
            panic!()
        };
        assert_eq!(a.user_factors, b.user_factors);
        assert_eq!(a.item_factors, b.item_factors);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let t = train(vec![vec![0]], 1);
        assert!(fit_ials(Arc::clone(&t), 1, 0.0, 1.0, 1, 0).is_err());
        assert!(fit_ials(Arc::clone(&t), 1, 0.1, 1.0, 0, 0).is_err());
        assert!(fit_ials(t, 0, 0.1, 1.0, 1, 0).is_err());
    }
}
