//! Persist fitted models in the self-describing container format and score
//! with the reloaded copies.
//!
//! Run with: `cargo run --example save_and_load_models`

use std::path::Path;
use std::sync::Arc;

use recbench::data::load_ncf_split;
use recbench::models::container::{load_model, save_model};
use recbench::models::{fit_ease, fit_mostpop};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let pack = load_ncf_split(&dir, "toy")?;
    let train = pack.train.clone();

    let out = tempfile::tempdir()?;
    let items: Vec<u32> = (0..train.num_items() as u32).collect();

    // MostPop is self-contained: reload without the train matrix.
    let mostpop = fit_mostpop(Arc::clone(&train));
    let path = out.path().join("mostpop.rbm");
    save_model(&mostpop, &path)?;
    let reloaded = load_model(&path, None)?;
    assert_eq!(mostpop.score(0, &items)?, reloaded.score(0, &items)?);
    println!(
        "mostpop: {} bytes, scores identical after reload",
        std::fs::metadata(&path)?.len()
    );

    // EASE scores through user histories: reattach the train matrix.
    let ease = fit_ease(Arc::clone(&train), 1.0)?;
    let path = out.path().join("ease.rbm");
    save_model(&ease, &path)?;
    assert!(load_model(&path, None).is_err(), "train matrix is required");
    let reloaded = load_model(&path, Some(Arc::clone(&train)))?;
    for user in 0..train.num_users() as u32 {
        assert_eq!(ease.score(user, &items)?, reloaded.score(user, &items)?);
    }
    println!(
        "ease: {} bytes, scores identical after reload with the train matrix",
        std::fs::metadata(&path)?.len()
    );
    Ok(())
}
