//! Fit the two closed-form item-item models on a small matrix and inspect
//! their weights and scores.
//!
//! Run with: `cargo run --example closed_form_models`

use std::sync::Arc;

use recbench::data::SparseInteractionMatrix;
use recbench::models::{fit_ease, fit_rp3beta, TrainedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // four users, five items
    let rows = vec![
        vec![(0u32, 1.0), (1, 1.0), (2, 1.0)],
        vec![(0, 1.0), (2, 1.0)],
        vec![(1, 1.0), (3, 1.0)],
        vec![(0, 1.0), (3, 1.0), (4, 1.0)],
    ];
    let train = Arc::new(SparseInteractionMatrix::from_rows(rows, 4, 5)?);
    let all_items: Vec<u32> = (0..5).collect();

    let ease = fit_ease(Arc::clone(&train), 1.5)?;
    println!("ease scores (closed-form Gram inverse, zero diagonal):");
    for user in 0..4u32 {
        println!("  user {user}: {:?}", round(&ease.score(user, &all_items)?));
    }

    let rp3 = fit_rp3beta(Arc::clone(&train), 1.0, 0.5, 3)?;
    println!("\nrp3beta scores (3-step walk, popularity-penalized, top-3 per column):");
    for user in 0..4u32 {
        println!("  user {user}: {:?}", round(&rp3.score(user, &all_items)?));
    }
    if let TrainedModel::Rp3Beta(model) = &rp3 {
        println!("\nrp3beta column for item 2 (source item -> weight):");
        let (sources, weights) = model.column(2);
        for (s, w) in sources.iter().zip(weights) {
            println!("  {s} -> {w:.4}");
        }
    }
    Ok(())
}

fn round(scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|s| (s * 1e4).round() / 1e4).collect()
}
