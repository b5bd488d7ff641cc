//! Per-user accuracy metrics under the single-relevant protocol and their
//! aggregation.
//!
//! With exactly one relevant item per user, every metric reduces to a closed
//! form in the positive's rank `r`:
//! - `hr`: 1 if `r <= k`.
//! - `ndcg`: `1 / log2(1 + r)` (the sampled-candidate formulation with ideal
//!   DCG 1).
//! - `mrr`: `1 / r`.
//! - `map`: mean of precision@j over j = 1..k, i.e. `(1/k) sum_{j=r..k} 1/j`.
//! - `mar`: mean of recall@j over j = 1..k, i.e. `(k - r + 1) / k`.
//! - `f1`: harmonic mean of precision@k and recall@k, `2 / (k + 1)` on a hit.
//! - `lauc`: truncated AUC normalized by the user's full non-consumed pool:
//!   `1 - (r - 1) / pool` on a hit, 0 on a miss.
//!
//! All cutoff metrics are 0 when the positive misses the top-k.

use std::collections::BTreeMap;

use super::ranking::RankedList;
use crate::{Error, Result};

pub const ACCURACY_METRICS: [&str; 7] = ["hr", "ndcg", "mrr", "map", "mar", "f1", "lauc"];

/// Per-user accuracy values, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRecord {
    pub hr: f64,
    pub ndcg: f64,
    pub mrr: f64,
    pub map: f64,
    pub mar: f64,
    pub f1: f64,
    pub lauc: f64,
}

impl AccuracyRecord {
    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "hr" => Some(self.hr),
            "ndcg" => Some(self.ndcg),
            "mrr" => Some(self.mrr),
            "map" => Some(self.map),
            "mar" => Some(self.mar),
            "f1" => Some(self.f1),
            "lauc" => Some(self.lauc),
            _ => None,
        }
    }
}

/// Mean of each metric over the evaluated users.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub means: BTreeMap<String, f64>,
    pub user_count: usize,
}

/// Closed-form accuracy record for one ranked list.
///
/// `full_negative_pool` is the user's count of non-consumed catalog items
/// (catalog size minus the train row length); it normalizes the truncated
/// AUC so that misses cost what the full pool says they cost.
pub fn accuracy_per_user(
    ranked: &RankedList,
    k: usize,
    full_negative_pool: usize,
) -> Result<AccuracyRecord> {
    if k == 0 {
        return Err(Error::Contract("cutoff k must be >= 1".into()));
    }
    if ranked.positive_rank == 0 {
        return Err(Error::Contract(format!(
            "user {} has no positive rank recorded",
            ranked.user
        )));
    }
    let r = ranked.positive_rank;
    if r > k {
        return Ok(AccuracyRecord {
            hr: 0.0,
            ndcg: 0.0,
            mrr: 0.0,
            map: 0.0,
            mar: 0.0,
            f1: 0.0,
            lauc: 0.0,
        });
    }
    let kf = k as f64;
    let rf = r as f64;
    let map = (r..=k).map(|j| 1.0 / j as f64).sum::<f64>() / kf;
    let lauc = if full_negative_pool == 0 {
        0.0
    } else {
        1.0 - (rf - 1.0) / full_negative_pool as f64
    };
    Ok(AccuracyRecord {
        hr: 1.0,
        ndcg: 1.0 / (1.0 + rf).log2(),
        mrr: 1.0 / rf,
        map,
        mar: (kf - rf + 1.0) / kf,
        f1: 2.0 / (kf + 1.0),
        lauc,
    })
}

/// Arithmetic mean per metric in fixed user order. The per-user records stay
/// with the caller for significance testing.
pub fn aggregate(records: &[AccuracyRecord]) -> Result<AggregateRow> {
    if records.is_empty() {
        return Err(Error::Contract("cannot aggregate zero users".into()));
    }
    let n = records.len() as f64;
    let mut means = BTreeMap::new();
    for metric in ACCURACY_METRICS {
        let sum: f64 = records.iter().map(|r| r.get(metric).unwrap()).sum();
        means.insert(metric.to_string(), sum / n);
    }
    Ok(AggregateRow {
        means,
        user_count: records.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(rank: usize) -> RankedList {
        RankedList {
            user: 0,
            items: vec![],
            scores: vec![],
            positive_rank: rank,
        }
    }

    #[test]
    fn perfect_hit_at_rank_one() {
        let a = accuracy_per_user(&ranked(1), 10, 1000).unwrap();
        assert_eq!(a.hr, 1.0);
        assert_eq!(a.ndcg, 1.0);
        assert_eq!(a.mrr, 1.0);
        assert_eq!(a.mar, 1.0);
        assert_eq!(a.lauc, 1.0);
    }

    #[test]
    fn rank_three_closed_forms() {
        let a = accuracy_per_user(&ranked(3), 10, 1000).unwrap();
        assert!((a.ndcg - 0.5).abs() < 1e-15);
        assert!((a.mrr - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.f1 - 2.0 / 11.0).abs() < 1e-15);
        assert!((a.mar - 0.8).abs() < 1e-15);
        let map_expect = (3..=10).map(|j| 1.0 / j as f64).sum::<f64>() / 10.0;
        assert!((a.map - map_expect).abs() < 1e-15);
        assert!((a.lauc - (1.0 - 2.0 / 1000.0)).abs() < 1e-15);
    }

    #[test]
    fn miss_zeroes_every_metric() {
        let a = accuracy_per_user(&ranked(11), 10, 1000).unwrap();
        for metric in ACCURACY_METRICS {
            assert_eq!(a.get(metric).unwrap(), 0.0, "{metric}");
        }
    }

    #[test]
    fn missing_rank_is_a_contract_error() {
        assert!(accuracy_per_user(&ranked(0), 10, 100).is_err());
    }

    #[test]
    fn aggregate_is_identity_for_one_user_and_mean_for_two() {
        let a = accuracy_per_user(&ranked(1), 10, 100).unwrap();
        let row = aggregate(&[a]).unwrap();
        assert_eq!(row.means["hr"], 1.0);
        assert_eq!(row.user_count, 1);

        let b = accuracy_per_user(&ranked(11), 10, 100).unwrap();
        let row = aggregate(&[a, b]).unwrap();
        assert_eq!(row.means["hr"], 0.5);
        assert_eq!(row.user_count, 2);
    }

    #[test]
    fn aggregate_rejects_empty_input() {
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn single_relevant_identities_hold_for_every_rank() {
        // f1 = 2 hr / 11 at k = 10; map <= mrr <= hr; ndcg <= hr; mar <= hr;
        // all metrics non-increasing in rank.
        let k = 10;
        let mut previous: Option<AccuracyRecord> = None;
        for r in 1..=101 {
            let a = accuracy_per_user(&ranked(r), k, 3600).unwrap();
            assert!((a.f1 - 2.0 * a.hr / 11.0).abs() < 1e-15);
            assert!(a.map <= a.mrr + 1e-15);
            assert!(a.mrr <= a.hr + 1e-15);
            assert!(a.ndcg <= a.hr + 1e-15);
            assert!(a.mar <= a.hr + 1e-15);
            for metric in ACCURACY_METRICS {
                let v = a.get(metric).unwrap();
                assert!((0.0..=1.0).contains(&v), "{metric} = {v}");
                if let Some(p) = &previous {
                    assert!(v <= p.get(metric).unwrap() + 1e-15, "{metric} increased");
                }
            }
            previous = Some(a);
        }
    }
}
