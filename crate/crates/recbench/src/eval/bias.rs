//! Popularity-bias metrics over the head/tail item partition.

use super::ranking::RankedList;
use crate::data::{EvaluationPack, PopularityProfile};
use crate::{Error, Result};

/// Exposure and parity statistics for the two popularity groups.
///
/// `pop_rsp` and `pop_reo` are the ratio of the population standard
/// deviation to the mean of the per-group probabilities; a group with a zero
/// denominator makes the metric undefined (`None`) rather than NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    /// Mean count of long-tail items per top-k list, in `[0, k]`.
    pub aclt: f64,
    /// `aclt / k`.
    pub aplt: f64,
    /// Mean over users of the mean train popularity of their top-k items.
    pub arp: f64,
    /// Dispersion of P(recommended | group).
    pub pop_rsp: Option<f64>,
    /// Dispersion of P(recommended | group, relevant).
    pub pop_reo: Option<f64>,
    pub aclt_per_user: Vec<f64>,
    pub arp_per_user: Vec<f64>,
}

pub fn bias_metrics(
    lists: &[RankedList],
    profile: &PopularityProfile,
    pack: &EvaluationPack,
    k: usize,
) -> Result<BiasReport> {
    if lists.is_empty() {
        return Err(Error::Contract("no ranked lists".into()));
    }
    let mut aclt_per_user = Vec::with_capacity(lists.len());
    let mut arp_per_user = Vec::with_capacity(lists.len());

    // Numerators and denominators of the two per-group probabilities.
    // Group 0 is the popular head, group 1 the long tail.
    let mut rec_in_group = [0u64; 2];
    let mut eligible_in_group = [0u64; 2];
    let mut hit_in_group = [0u64; 2];
    let mut positives_in_group = [0u64; 2];

    let head_total = profile.head_size() as u64;
    let tail_total = (profile.num_items() - profile.head_size()) as u64;

    for list in lists {
        let top = &list.items[..list.items.len().min(k)];
        let mut tail_count = 0u64;
        let mut pop_sum = 0.0;
        for &item in top {
            let group = group_of(profile, item);
            if group == 1 {
                tail_count += 1;
            }
            pop_sum += profile.count(item) as f64;
            if !pack.train.contains(list.user, item) {
                rec_in_group[group] += 1;
            }
        }
        aclt_per_user.push(tail_count as f64);
        arp_per_user.push(if top.is_empty() {
            0.0
        } else {
            pop_sum / top.len() as f64
        });

        // Eligible items per group: the group size minus what the user
        // already consumed in train.
        let mut consumed_head = 0u64;
        for &item in pack.train.row(list.user) {
            if profile.is_head(item) {
                consumed_head += 1;
            }
        }
        let consumed_total = pack.train.row_len(list.user) as u64;
        eligible_in_group[0] += head_total - consumed_head;
        eligible_in_group[1] += tail_total - (consumed_total - consumed_head);

        if let Some(entry) = &pack.test[list.user as usize] {
            let group = group_of(profile, entry.item);
            positives_in_group[group] += 1;
            if list.positive_rank <= k {
                hit_in_group[group] += 1;
            }
        }
    }

    let n = lists.len() as f64;
    let aclt = aclt_per_user.iter().sum::<f64>() / n;
    let arp = arp_per_user.iter().sum::<f64>() / n;

    let pop_rsp = dispersion(&rec_in_group, &eligible_in_group);
    let pop_reo = dispersion(&hit_in_group, &positives_in_group);

    Ok(BiasReport {
        aclt,
        aplt: aclt / k as f64,
        arp,
        pop_rsp,
        pop_reo,
        aclt_per_user,
        arp_per_user,
    })
}

fn group_of(profile: &PopularityProfile, item: u32) -> usize {
    if profile.is_head(item) {
        0
    } else {
        1
    }
}

/// Population std over mean of the per-group probabilities; `None` when any
/// group's denominator is zero or the mean vanishes.
fn dispersion(numerators: &[u64; 2], denominators: &[u64; 2]) -> Option<f64> {
    if denominators.contains(&0) {
        return None;
    }
    let p: Vec<f64> = numerators
        .iter()
        .zip(denominators)
        .map(|(&n, &d)| n as f64 / d as f64)
        .collect();
    let mean = (p[0] + p[1]) / 2.0;
    if mean == 0.0 {
        return None;
    }
    let std = ((p[0] - mean).powi(2) + (p[1] - mean).powi(2)) / 2.0;
    Some(std.sqrt() / mean)
}
