//! Train the fused GMF + MLP model on the toy split and inspect the two
//! branch representations behind one prediction.
//!
//! Run with: `cargo run --example train_neumf`

use std::path::Path;

use recbench::data::load_ncf_split;
use recbench::models::{
    fit_neumf, gmf_forward, mlp_forward, neumf_forward, TrainConfig, TrainedModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let pack = load_ncf_split(&dir, "toy")?;

    // predictive factors f = 4: GMF embeddings of 4, MLP embeddings of 8,
    // tower 16 -> 8 -> 4 with ReLU, logistic output.
    let config = TrainConfig {
        embedding_dim: 4,
        learning_rate: 0.02,
        l2_reg: 0.0,
        negatives_per_positive: 2,
        epochs: 30,
        batch_size: 4,
        seed: 7,
        selection_metric: "hr@10".into(),
    };
    let model = fit_neumf(&pack, &config)?;
    let TrainedModel::NeuMf(m) = &model else {
        unreachable!()
    };
    println!("epoch  mean_loss  hr@10");
    for stats in m.trace.epochs.iter().take(5) {
        println!(
            "{:>5}  {:>9.4}  {:>5.3}",
            stats.epoch, stats.mean_loss, stats.hr
        );
    }
    println!("  ... selected epoch {} (hr {:.3})", m.trace.best_epoch, m.trace.best_hr);

    let (user, item) = (0u32, 4u32);
    println!("\nbranches for user {user}, item {item}:");
    println!("  gmf (element-wise product): {:?}", round(&gmf_forward(&m.params, user, item)));
    println!("  mlp (tower output):         {:?}", round(&mlp_forward(&m.params, user, item)));
    println!("  fused logistic score:       {:.4}", neumf_forward(&m.params, user, item));

    let scores = model.score(user, &[0, 2, 4, 7])?;
    println!("  score contract over [0,2,4,7]: {:?}", round(&scores));
    Ok(())
}

fn round(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| (v * 1e4).round() / 1e4).collect()
}
