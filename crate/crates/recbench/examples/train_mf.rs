//! Train the biased dot-product factorization on the toy split, watch the
//! per-epoch HR@10 trace, and checkpoint/resume mid-run.
//!
//! Run with: `cargo run --example train_mf`

use std::path::Path;

use recbench::data::load_ncf_split;
use recbench::models::container::{load_mf_checkpoint, save_mf_checkpoint};
use recbench::models::{MfTrainer, TrainConfig, TrainedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let pack = load_ncf_split(&dir, "toy")?;

    let config = TrainConfig {
        embedding_dim: 8,
        learning_rate: 0.05,
        l2_reg: 0.001,
        negatives_per_positive: 2,
        epochs: 10,
        batch_size: 1,
        seed: 42,
        selection_metric: "hr@10".into(),
    };

    let mut trainer = MfTrainer::new(&pack, &config)?;
    println!("epoch  mean_loss  hr@10  ndcg@10");
    for _ in 0..5 {
        let stats = trainer.run_epoch(&pack)?;
        println!(
            "{:>5}  {:>9.4}  {:>5.3}  {:>7.3}",
            stats.epoch, stats.mean_loss, stats.hr, stats.ndcg
        );
    }

    // checkpoint after five epochs and resume in a fresh trainer
    let ckpt = tempfile::tempdir()?;
    let path = ckpt.path().join("mf.ckpt");
    save_mf_checkpoint(&trainer.state(), &path)?;
    let mut resumed = MfTrainer::from_state(load_mf_checkpoint(&path)?);
    for _ in 0..5 {
        let stats = resumed.run_epoch(&pack)?;
        println!(
            "{:>5}  {:>9.4}  {:>5.3}  {:>7.3}  (resumed)",
            stats.epoch, stats.mean_loss, stats.hr, stats.ndcg
        );
    }

    let TrainedModel::Mf(model) = resumed.into_model() else {
        unreachable!()
    };
    println!(
        "\nselected epoch {} with hr@10 {:.3}",
        model.trace.best_epoch, model.trace.best_hr
    );
    Ok(())
}
