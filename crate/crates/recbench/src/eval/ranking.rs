//! Candidate ranking under the sampled leave-one-out protocol.

use rayon::prelude::*;

use crate::data::EvaluationPack;
use crate::models::TrainedModel;
use crate::{Error, Result};

/// One user's ranked shortlist.
///
/// `items`/`scores` hold the top-K candidates in descending score order with
/// ties broken by ascending item id; `positive_rank` is the 1-based rank of
/// the held-out positive among all candidates, not just the top-K.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: u32,
    pub items: Vec<u32>,
    pub scores: Vec<f64>,
    pub positive_rank: usize,
}

/// Scores and ranks one user's candidates (positive first, then negatives)
/// with any scoring function.
pub fn rank_with<F>(score: F, pack: &EvaluationPack, user: u32, k: usize) -> Result<RankedList>
where
    F: Fn(u32, &[u32]) -> Result<Vec<f64>>,
{
    let entry = pack.test[user as usize].as_ref().ok_or_else(|| {
        Error::Contract(format!("user {user} has no test entry to rank"))
    })?;
    let mut candidates = Vec::with_capacity(1 + entry.negatives.len());
    candidates.push(entry.item);
    candidates.extend_from_slice(&entry.negatives);
    let scores = score(user, &candidates)?;
    if scores.len() != candidates.len() {
        return Err(Error::Contract(format!(
            "scorer returned {} scores for {} candidates",
            scores.len(),
            candidates.len()
        )));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(candidates[a].cmp(&candidates[b]))
    });
    let positive_rank = order.iter().position(|&idx| idx == 0).unwrap() + 1;
    let keep = k.min(candidates.len());
    let items = order[..keep].iter().map(|&idx| candidates[idx]).collect();
    let top_scores = order[..keep].iter().map(|&idx| scores[idx]).collect();
    Ok(RankedList {
        user,
        items,
        scores: top_scores,
        positive_rank,
    })
}

/// Ranks one user's candidates with a fitted model.
pub fn rank_candidates(
    model: &TrainedModel,
    pack: &EvaluationPack,
    user: u32,
    k: usize,
) -> Result<RankedList> {
    rank_with(|u, items| model.score(u, items), pack, user, k)
}

/// Ranks every test user, in user order, evaluating users in parallel.
pub fn rank_all_users(
    model: &TrainedModel,
    pack: &EvaluationPack,
    k: usize,
) -> Result<Vec<RankedList>> {
    pack.test_users()
        .par_iter()
        .map(|&u| rank_candidates(model, pack, u, k))
        .collect()
}

/// HR@k and nDCG@k of a scoring function over all test users; used for
/// per-epoch model selection during training.
pub fn hr_ndcg_with<F>(score: F, pack: &EvaluationPack, k: usize) -> Result<(f64, f64)>
where
    F: Fn(u32, &[u32]) -> Result<Vec<f64>> + Sync,
{
    let users = pack.test_users();
    if users.is_empty() {
        return Err(Error::Contract("no test users to evaluate".into()));
    }
    let ranks: Result<Vec<usize>> = users
        .par_iter()
        .map(|&u| rank_with(&score, pack, u, k).map(|r| r.positive_rank))
        .collect();
    let ranks = ranks?;
    let mut hr = 0.0;
    let mut ndcg = 0.0;
    for r in ranks {
        if r <= k {
            hr += 1.0;
            ndcg += 1.0 / ((r as f64) + 1.0).log2();
        }
    }
    let n = users.len() as f64;
    Ok((hr / n, ndcg / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EvaluationPack, SparseInteractionMatrix, TestEntry};
    use std::sync::Arc;

    fn pack() -> EvaluationPack {
        let train = Arc::new(
            SparseInteractionMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)]], 1, 6).unwrap(),
        );
        EvaluationPack {
            train,
            test: vec![Some(TestEntry {
                item: 2,
                rating: 1.0,
                timestamp: 0,
                negatives: vec![3, 4, 5],
            })],
            candidate_count: 4,
        }
    }

    #[test]
    fn positive_scored_highest_ranks_first() {
        let p = pack();
        let ranked = rank_with(
            |_, items| {
                Ok(items
                    .iter()
                    .map(|&i| if i == 2 { 10.0 } else { 1.0 })
                    .collect())
            },
            &p,
            0,
            10,
        )
        .unwrap();
        assert_eq!(ranked.positive_rank, 1);
        assert_eq!(ranked.items[0], 2);
        assert_eq!(ranked.items.len(), 4);
    }

    #[test]
    fn equal_scores_break_ties_by_item_id() {
        let p = pack();
        let ranked = rank_with(|_, items| Ok(vec![0.5; items.len()]), &p, 0, 2).unwrap();
        // positive item 2 has the smallest candidate id
        assert_eq!(ranked.positive_rank, 1);
        assert_eq!(ranked.items, vec![2, 3]);
        assert_eq!(ranked.scores, vec![0.5, 0.5]);
    }

    #[test]
    fn positive_rank_counts_past_the_cutoff() {
        let p = pack();
        let ranked = rank_with(
            |_, items| {
                Ok(items
                    .iter()
                    .map(|&i| if i == 2 { 0.0 } else { 1.0 })
                    .collect())
            },
            &p,
            0,
            2,
        )
        .unwrap();
        assert_eq!(ranked.positive_rank, 4);
        assert_eq!(ranked.items.len(), 2);
    }

    #[test]
    fn user_without_test_entry_is_a_contract_error() {
        let mut p = pack();
        p.test[0] = None;
        let err = rank_with(|_, items| Ok(vec![0.0; items.len()]), &p, 0, 2);
        assert!(matches!(err, Err(Error::Contract(_))));
    }
}
