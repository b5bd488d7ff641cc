//! Pairwise significance testing over per-user metric vectors.
//!
//! Run with: `cargo run --example significance_heatmap`

use std::collections::BTreeMap;

use recbench::stats::{build_significance_matrix, paired_t_test};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // per-user ndcg vectors of three systems over the same ten users
    let mut per_algorithm = BTreeMap::new();
    per_algorithm.insert(
        "strong".to_string(),
        vec![0.9, 0.7, 0.8, 0.95, 0.6, 0.85, 0.9, 0.75, 0.8, 0.7],
    );
    per_algorithm.insert(
        "strong_twin".to_string(),
        vec![0.88, 0.72, 0.79, 0.93, 0.62, 0.84, 0.91, 0.74, 0.78, 0.71],
    );
    per_algorithm.insert(
        "weak".to_string(),
        vec![0.3, 0.4, 0.2, 0.5, 0.1, 0.35, 0.4, 0.25, 0.3, 0.2],
    );

    let pair = paired_t_test(&per_algorithm["strong"], &per_algorithm["weak"])?;
    println!(
        "strong vs weak: t = {:.3}, p = {:.2e}{}",
        pair.t,
        pair.p,
        if pair.degenerate { " (degenerate)" } else { "" }
    );

    let matrix = build_significance_matrix(&per_algorithm, "ndcg", 0.05)?;
    let n = matrix.algorithms.len();
    println!("\np-values ({} @ {}):", matrix.metric, matrix.threshold);
    print!("{:>12}", "");
    for name in &matrix.algorithms {
        print!("{name:>13}");
    }
    println!();
    for i in 0..n {
        print!("{:>12}", matrix.algorithms[i]);
        for j in 0..n {
            if i == j {
                print!("{:>13}", "-");
            } else {
                print!("{:>13.4}", matrix.p(i, j));
            }
        }
        println!();
    }
    println!("\nsignificant pairs (p < 0.05):");
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix.is_significant(i, j) {
                println!("  {} vs {}", matrix.algorithms[i], matrix.algorithms[j]);
            }
        }
    }
    Ok(())
}
