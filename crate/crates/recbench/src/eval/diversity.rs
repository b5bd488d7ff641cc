//! Distribution-level diversity of the recommendation lists.

use super::ranking::RankedList;
use crate::{Error, Result};

/// Item coverage, the inverted Gini index, and the Shannon entropy of the
/// recommendation-count distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    /// Distinct items appearing in any top-k list.
    pub item_coverage: usize,
    /// `1 - Gini` of the recommendation counts over the full catalog
    /// (never-recommended items included); higher is more diverse.
    pub gini: f64,
    /// Entropy in bits of the recommended-item shares.
    pub entropy_bits: f64,
}

pub fn diversity_metrics(
    lists: &[RankedList],
    catalog_size: usize,
    k: usize,
) -> Result<DiversityReport> {
    if catalog_size == 0 {
        return Err(Error::Contract("catalog_size must be >= 1".into()));
    }
    let counts = recommendation_counts(lists, catalog_size, k);
    let total: u64 = counts.iter().sum();
    let item_coverage = counts.iter().filter(|&&c| c > 0).count();
    if total == 0 {
        return Ok(DiversityReport {
            item_coverage: 0,
            gini: 0.0,
            entropy_bits: 0.0,
        });
    }
    let totalf = total as f64;

    // Classical Gini over the full catalog: sort counts ascending (zeros
    // first), weight each share by its position. Reported inverted.
    let mut sorted: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    let n = catalog_size as f64;
    let zero_items = catalog_size - sorted.len();
    let mut gini = 0.0;
    for (j, &c) in sorted.iter().enumerate() {
        let position = (zero_items + j + 1) as f64; // 1-based over the catalog
        gini += (2.0 * position - n - 1.0) * (c as f64 / totalf);
    }
    let gini = if catalog_size > 1 {
        1.0 - gini / (n - 1.0)
    } else {
        1.0
    };

    let entropy_bits = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / totalf;
            -p * p.log2()
        })
        .sum();

    Ok(DiversityReport {
        item_coverage,
        gini,
        entropy_bits,
    })
}

pub(crate) fn recommendation_counts(
    lists: &[RankedList],
    catalog_size: usize,
    k: usize,
) -> Vec<u64> {
    let mut counts = vec![0u64; catalog_size];
    for list in lists {
        for &item in list.items.iter().take(k) {
            counts[item as usize] += 1;
        }
    }
    counts
}
