//! Relevance-weighted novelty: expected popularity complement and expected
//! free discovery.
//!
//! Both metrics reward placing the (single) relevant item high while it is
//! unpopular. Per user, only the hit contributes, discounted by
//! `1 / log2(1 + rank)` and normalized by the summed discount of the whole
//! list. The popularity of an item is its train count; EPC complements the
//! count normalized by the number of users (the fraction of users who have
//! seen the item), EFD takes the negative log2 of the count normalized by
//! the total number of train interactions (the item's share of all events).

use super::ranking::RankedList;
use crate::data::PopularityProfile;
use crate::{Error, Result};

/// Per-user EPC and EFD contributions plus their means.
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyReport {
    pub epc: f64,
    pub efd: f64,
    pub epc_per_user: Vec<f64>,
    pub efd_per_user: Vec<f64>,
}

pub fn novelty_metrics(
    lists: &[RankedList],
    profile: &PopularityProfile,
    k: usize,
) -> Result<NoveltyReport> {
    if lists.is_empty() {
        return Err(Error::Contract("no ranked lists".into()));
    }
    let num_users = profile.num_users() as f64;
    let total = profile.total_interactions() as f64;
    let mut epc_per_user = Vec::with_capacity(lists.len());
    let mut efd_per_user = Vec::with_capacity(lists.len());
    for list in lists {
        let len = list.items.len().min(k);
        let norm: f64 = (1..=len).map(discount).sum();
        let r = list.positive_rank;
        let (mut epc, mut efd) = (0.0, 0.0);
        if r <= len && norm > 0.0 {
            let hit = list.items[r - 1];
            // Items that only ever appear as a held-out positive have train
            // count 0; floor at one interaction so the log stays finite.
            let count = profile.count(hit).max(1) as f64;
            let disc = discount(r);
            epc = disc * (1.0 - count / num_users) / norm;
            efd = disc * -(count / total).log2() / norm;
        }
        epc_per_user.push(epc);
        efd_per_user.push(efd);
    }
    let n = lists.len() as f64;
    Ok(NoveltyReport {
        epc: epc_per_user.iter().sum::<f64>() / n,
        efd: efd_per_user.iter().sum::<f64>() / n,
        epc_per_user,
        efd_per_user,
    })
}

fn discount(rank: usize) -> f64 {
    1.0 / (1.0 + rank as f64).log2()
}
