//! Fit the three latent/sparse-regression baselines - PureSVD, SLIM, and
//! implicit ALS - and compare their score tables on one toy matrix.
//!
//! Run with: `cargo run --example latent_models`

use std::sync::Arc;

use recbench::data::SparseInteractionMatrix;
use recbench::models::{fit_ials, fit_puresvd, fit_slim, TrainedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = vec![
        vec![(0u32, 1.0), (1, 1.0), (4, 1.0)],
        vec![(0, 1.0), (2, 1.0)],
        vec![(1, 1.0), (2, 1.0), (3, 1.0)],
        vec![(0, 1.0), (3, 1.0)],
        vec![(2, 1.0), (4, 1.0)],
        vec![(0, 1.0), (1, 1.0)],
    ];
    let train = Arc::new(SparseInteractionMatrix::from_rows(rows, 6, 5)?);
    let all_items: Vec<u32> = (0..5).collect();

    let svd = fit_puresvd(Arc::clone(&train), 3, 7, 4, 3)?;
    if let TrainedModel::PureSvd(m) = &svd {
        println!("puresvd singular values: {:?}", round(&m.singular_values));
    }
    let slim = fit_slim(Arc::clone(&train), 0.02, 0.05, 4, 500, 1e-8)?;
    if let TrainedModel::Slim(m) = &slim {
        let nonzeros = m.weights.len();
        println!("slim kept {nonzeros} nonnegative weights, zero diagonal");
    }
    let ials = fit_ials(Arc::clone(&train), 3, 0.05, 10.0, 12, 7)?;
    if let TrainedModel::Ials(m) = &ials {
        println!(
            "ials objective: {:.4} -> {:.4} over {} half-sweeps (non-increasing)",
            m.objective_trace.first().unwrap(),
            m.objective_trace.last().unwrap(),
            m.objective_trace.len()
        );
    }

    println!("\nscores for user 0 (consumed items 0, 1, 4):");
    for (name, model) in [("puresvd", &svd), ("slim", &slim), ("ials", &ials)] {
        println!("  {name:>8}: {:?}", round(&model.score(0, &all_items)?));
    }
    Ok(())
}

fn round(scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|s| (s * 1e4).round() / 1e4).collect()
}
