//! Item popularity statistics and the head/tail catalog partition.

use super::sparse::SparseInteractionMatrix;
use crate::{Error, Result};

/// Train-set popularity counts plus the popular-head / long-tail partition
/// used by the bias metrics.
///
/// The head holds the `ceil(head_fraction * num_items)` items with the most
/// train interactions; count ties are broken towards the smaller item id.
/// Items without any train interaction always land in the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    counts: Vec<u64>,
    head: Vec<bool>,
    head_fraction: f64,
    num_users: usize,
    total_interactions: u64,
}

impl PopularityProfile {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, item: u32) -> u64 {
        self.counts[item as usize]
    }

    pub fn is_head(&self, item: u32) -> bool {
        self.head[item as usize]
    }

    pub fn is_tail(&self, item: u32) -> bool {
        !self.head[item as usize]
    }

    pub fn head_fraction(&self) -> f64 {
        self.head_fraction
    }

    pub fn head_size(&self) -> usize {
        self.head.iter().filter(|&&h| h).count()
    }

    pub fn num_items(&self) -> usize {
        self.counts.len()
    }

    /// Number of users in the train matrix the profile was built from.
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// Total train interactions (the sum of all counts).
    pub fn total_interactions(&self) -> u64 {
        self.total_interactions
    }
}

/// Builds the popularity profile of a train matrix.
pub fn popularity_profile(
    train: &SparseInteractionMatrix,
    head_fraction: f64,
) -> Result<PopularityProfile> {
    if !(head_fraction > 0.0 && head_fraction < 1.0) {
        return Err(Error::Contract(format!(
            "head_fraction must lie in (0,1), got {head_fraction}"
        )));
    }
    let counts = train.item_counts();
    let num_items = counts.len();
    let mut order: Vec<u32> = (0..num_items as u32).collect();
    order.sort_unstable_by_key(|&i| (std::cmp::Reverse(counts[i as usize]), i));
    let head_size = (head_fraction * num_items as f64).ceil() as usize;
    let mut head = vec![false; num_items];
    for &item in order.iter().take(head_size) {
        head[item as usize] = true;
    }
    let total_interactions = counts.iter().sum();
    Ok(PopularityProfile {
        counts,
        head,
        head_fraction,
        num_users: train.num_users(),
        total_interactions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[&[u32]], num_items: usize) -> SparseInteractionMatrix {
        let rows = cols
            .iter()
            .map(|r| r.iter().map(|&i| (i, 1.0)).collect())
            .collect();
        SparseInteractionMatrix::from_rows(rows, cols.len(), num_items).unwrap()
    }

    #[test]
    fn tie_at_the_boundary_goes_to_the_smaller_id() {
        // counts [5,5,1,0,0], fraction 0.2 -> single head slot -> item 0.
        let rows: Vec<&[u32]> = vec![
            &[0, 1],
            &[0, 1],
            &[0, 1],
            &[0, 1],
            &[0, 1, 2],
        ];
        let profile = popularity_profile(&matrix(&rows, 5), 0.2).unwrap();
        assert_eq!(profile.counts(), &[5, 5, 1, 0, 0]);
        assert_eq!(profile.head_size(), 1);
        assert!(profile.is_head(0));
        assert!(profile.is_tail(1));
    }

    #[test]
    fn head_size_uses_ceiling() {
        let rows: Vec<&[u32]> = vec![&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]];
        let profile = popularity_profile(&matrix(&rows, 10), 0.2).unwrap();
        assert_eq!(profile.head_size(), 2);
    }

    #[test]
    fn uniform_counts_take_lowest_ids() {
        let rows: Vec<&[u32]> = vec![&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]];
        let profile = popularity_profile(&matrix(&rows, 10), 0.2).unwrap();
        assert!(profile.is_head(0));
        assert!(profile.is_head(1));
        assert!((2..10).all(|i| profile.is_tail(i)));
    }

    #[test]
    fn fraction_bounds_are_enforced() {
        let rows: Vec<&[u32]> = vec![&[0]];
        assert!(popularity_profile(&matrix(&rows, 1), 0.0).is_err());
        assert!(popularity_profile(&matrix(&rows, 1), 1.0).is_err());
    }

    #[test]
    fn partition_ignores_order_of_equal_counts_away_from_the_boundary() {
        // counts [4,3,3,1,1,0]: head size 2 holds items {0,1,2}'s top two;
        // the 3-3 tie sits inside/at the boundary and resolves by id, while
        // relabeling the equal-count pair (3,4) must not affect membership.
        let a: Vec<&[u32]> = vec![&[0, 1, 2], &[0, 1, 2], &[0, 1, 2], &[0, 3], &[4]];
        let b: Vec<&[u32]> = vec![&[0, 1, 2], &[0, 1, 2], &[0, 1, 2], &[0, 4], &[3]];
        let pa = popularity_profile(&matrix(&a, 6), 0.34).unwrap();
        let pb = popularity_profile(&matrix(&b, 6), 0.34).unwrap();
        assert_eq!(pa.head_size(), 3);
        for item in 0..6 {
            assert_eq!(pa.is_head(item), pb.is_head(item), "item {item}");
        }
    }
}
