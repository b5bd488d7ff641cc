//! Compressed sparse row storage for binary interaction matrices.

use crate::{Error, Result};

/// Row-major compressed sparse matrix of user-item interactions.
///
/// Column indices are strictly increasing within each row and all values are
/// 1.0 when the matrix was built from an implicit-feedback log.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseInteractionMatrix {
    row_offsets: Vec<usize>,
    column_indices: Vec<u32>,
    values: Vec<f64>,
    num_users: usize,
    num_items: usize,
}

impl SparseInteractionMatrix {
    /// Builds a matrix from per-row `(item, value)` pairs. Pairs within a row
    /// may arrive unsorted; duplicates within a row are rejected.
    pub fn from_rows(
        rows: Vec<Vec<(u32, f64)>>,
        num_users: usize,
        num_items: usize,
    ) -> Result<Self> {
        if rows.len() != num_users {
            return Err(Error::Contract(format!(
                "expected {num_users} rows, got {}",
                rows.len()
            )));
        }
        let mut row_offsets = Vec::with_capacity(num_users + 1);
        let mut column_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (user, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(i, _)| i);
            for window in row.windows(2) {
                if window[0].0 == window[1].0 {
                    return Err(Error::Contract(format!(
                        "duplicate item {} in row {user}",
                        window[0].0
                    )));
                }
            }
            for (item, value) in row {
                if item as usize >= num_items {
                    return Err(Error::Contract(format!(
                        "item {item} out of range in row {user}"
                    )));
                }
                column_indices.push(item);
                values.push(value);
            }
            row_offsets.push(column_indices.len());
        }
        Ok(Self {
            row_offsets,
            column_indices,
            values,
            num_users,
            num_items,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Total number of stored interactions.
    pub fn nnz(&self) -> usize {
        self.column_indices.len()
    }

    /// Sorted item indices of one user's row.
    pub fn row(&self, user: u32) -> &[u32] {
        let (lo, hi) = self.row_bounds(user);
        &self.column_indices[lo..hi]
    }

    /// Values aligned with [`Self::row`].
    pub fn row_values(&self, user: u32) -> &[f64] {
        let (lo, hi) = self.row_bounds(user);
        &self.values[lo..hi]
    }

    fn row_bounds(&self, user: u32) -> (usize, usize) {
        let u = user as usize;
        (self.row_offsets[u], self.row_offsets[u + 1])
    }

    /// Number of interactions in one user's row.
    pub fn row_len(&self, user: u32) -> usize {
        let (lo, hi) = self.row_bounds(user);
        hi - lo
    }

    /// Membership test via binary search on the sorted row.
    pub fn contains(&self, user: u32, item: u32) -> bool {
        self.row(user).binary_search(&item).is_ok()
    }

    /// Per-item interaction counts over the whole matrix.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.num_items];
        for &item in &self.column_indices {
            counts[item as usize] += 1;
        }
        counts
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[u32] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
