//! Negative sampling for pointwise training.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::data::SparseInteractionMatrix;
use crate::{Error, Result};

/// Draws `m` items uniformly with replacement from the items the user has
/// not consumed, advancing the caller's RNG state deterministically.
pub fn sample_training_negatives(
    train: &SparseInteractionMatrix,
    user: u32,
    m: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<u32>> {
    let num_items = train.num_items() as u32;
    let consumed = train.row(user);
    if consumed.len() as u32 == num_items {
        return Err(Error::Protocol {
            user,
            message: "user has consumed the full catalog, no negatives exist".into(),
        });
    }
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let candidate = rng.gen_range(0..num_items);
        if consumed.binary_search(&candidate).is_err() {
            out.push(candidate);
        }
    }
    Ok(out)
}
