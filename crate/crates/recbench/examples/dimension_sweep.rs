//! Sweep the MF embedding dimension and print the resulting HR/nDCG curve
//! data, one train/evaluate cycle per dimension.
//!
//! Run with: `cargo run --example dimension_sweep`

use std::path::Path;

use recbench::harness::{sweep, sweep_table, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy.json");
    let config = ExperimentConfig::load(&config_path)?;
    let data = sweep(&config, "mf", &[2, 4, 8], false)?;
    println!(
        "{} on {} at cutoff {}:",
        data.model, data.dataset, data.cutoff
    );
    print!("{}", sweep_table(&data));
    Ok(())
}
