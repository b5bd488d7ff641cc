//! Paired significance testing over per-user metric vectors.

mod special;
mod ttest;

pub use special::{betai, ln_gamma};
pub use ttest::{
    build_significance_matrix, paired_t_test, two_sided_p, SignificanceMatrix, TTestResult,
};
