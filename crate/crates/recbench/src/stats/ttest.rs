//! Student's paired t-test and the pairwise significance matrix.

use std::collections::BTreeMap;

use super::special::betai;
use crate::{Error, Result};

/// Outcome of one paired test. Zero-variance differences are flagged
/// degenerate and carry `p = 1.0` so constant metric columns never abort a
/// run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub degenerate: bool,
}

/// Two-sided paired t-test over user-aligned metric vectors.
///
/// `t = mean(d) / (sd(d) / sqrt(n))` with the sample standard deviation
/// (n - 1 denominator); the p-value comes from the t distribution with
/// `n - 1` degrees of freedom through the regularized incomplete beta
/// function.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "paired vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Contract(
            "paired t-test needs at least 2 aligned values".into(),
        ));
    }
    let nf = n as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>();
    let sd = (ss / (nf - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok(TTestResult {
            t: 0.0,
            p: 1.0,
            degenerate: true,
        });
    }
    let t = mean / (sd / nf.sqrt());
    let p = two_sided_p(t, nf - 1.0);
    Ok(TTestResult {
        t,
        p,
        degenerate: false,
    })
}

/// `P(|T| >= |t|)` for T ~ t(dof), via `I_x(dof/2, 1/2)` with
/// `x = dof / (dof + t^2)`.
pub fn two_sided_p(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    betai(dof / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Pairwise p-values for one metric across algorithms, with the boolean
/// significance mask. Ordering is fixed by algorithm-name sort.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceMatrix {
    pub algorithms: Vec<String>,
    pub metric: String,
    /// Row-major `n x n`; diagonal entries are NaN (undefined).
    pub p_values: Vec<f64>,
    /// `p < threshold`, false on the diagonal.
    pub significant: Vec<bool>,
    pub threshold: f64,
}

impl SignificanceMatrix {
    pub fn p(&self, row: usize, col: usize) -> f64 {
        self.p_values[row * self.algorithms.len() + col]
    }

    pub fn is_significant(&self, row: usize, col: usize) -> bool {
        self.significant[row * self.algorithms.len() + col]
    }
}

/// Tests every unordered pair of algorithms on user-aligned metric vectors.
pub fn build_significance_matrix(
    per_algorithm: &BTreeMap<String, Vec<f64>>,
    metric: &str,
    threshold: f64,
) -> Result<SignificanceMatrix> {
    if per_algorithm.len() < 2 {
        return Err(Error::Contract(
            "significance matrix needs at least 2 algorithms".into(),
        ));
    }
    let algorithms: Vec<String> = per_algorithm.keys().cloned().collect();
    let len = per_algorithm[&algorithms[0]].len();
    for (name, vector) in per_algorithm {
        if vector.len() != len {
            return Err(Error::Contract(format!(
                "per-user vector of {name} has length {}, expected {len}",
                vector.len()
            )));
        }
    }
    let n = algorithms.len();
    let mut p_values = vec![f64::NAN; n * n];
    let mut significant = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let result = paired_t_test(&per_algorithm[&algorithms[i]], &per_algorithm[&algorithms[j]])?;
            p_values[i * n + j] = result.p;
            p_values[j * n + i] = result.p;
            let sig = result.p < threshold;
            significant[i * n + j] = sig;
            significant[j * n + i] = sig;
        }
    }
    Ok(SignificanceMatrix {
        algorithms,
        metric: metric.to_string(),
        p_values,
        significant,
        threshold,
    })
}
