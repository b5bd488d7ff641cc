//! Temporal leave-one-out splitting and test-negative sampling.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::log::InteractionLog;
use super::sparse::SparseInteractionMatrix;
use crate::{Error, Result};

/// One user's held-out test interaction plus its sampled negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TestEntry {
    pub item: u32,
    pub rating: f64,
    pub timestamp: i64,
    pub negatives: Vec<u32>,
}

/// Train matrix plus one held-out positive and a fixed-size negative
/// shortlist per test user.
///
/// Invariants: for every test user, the positive and the negatives are all
/// absent from that user's train row, and every test user carries exactly
/// `candidate_count - 1` negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPack {
    pub train: Arc<SparseInteractionMatrix>,
    /// Indexed by user id; `None` for users without a test entry.
    pub test: Vec<Option<TestEntry>>,
    /// Uniform `1 + negatives per user` over all test users.
    pub candidate_count: usize,
}

impl EvaluationPack {
    /// User ids that carry a test entry, in ascending order.
    pub fn test_users(&self) -> Vec<u32> {
        self.test
            .iter()
            .enumerate()
            .filter_map(|(u, t)| t.as_ref().map(|_| u as u32))
            .collect()
    }

    pub fn num_test_users(&self) -> usize {
        self.test.iter().filter(|t| t.is_some()).count()
    }

    /// Checks the structural invariants; used by loaders and tests.
    pub fn validate(&self) -> Result<()> {
        let mut expected: Option<usize> = None;
        for (u, entry) in self.test.iter().enumerate() {
            let Some(entry) = entry else { continue };
            let user = u as u32;
            if self.train.contains(user, entry.item) {
                return Err(Error::Consistency(format!(
                    "test positive {} of user {u} appears in its train row",
                    entry.item
                )));
            }
            match expected {
                None => expected = Some(entry.negatives.len()),
                Some(n) if n != entry.negatives.len() => {
                    return Err(Error::Consistency(format!(
                        "user {u} has {} negatives, expected {n}",
                        entry.negatives.len()
                    )));
                }
                _ => {}
            }
            for &neg in &entry.negatives {
                if neg == entry.item {
                    return Err(Error::Consistency(format!(
                        "user {u}: negative {neg} equals the test positive"
                    )));
                }
                if self.train.contains(user, neg) {
                    return Err(Error::Consistency(format!(
                        "user {u}: negative {neg} appears in its train row"
                    )));
                }
            }
        }
        if let Some(n) = expected {
            if self.candidate_count != n + 1 {
                return Err(Error::Consistency(format!(
                    "candidate_count {} disagrees with 1 + {n} negatives",
                    self.candidate_count
                )));
            }
        }
        Ok(())
    }
}

/// A leave-one-out split before negatives have been sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub train: SparseInteractionMatrix,
    /// Indexed by user; `None` when the user had a single interaction and was
    /// kept entirely in train.
    pub holdout: Vec<Option<HoldoutEvent>>,
    /// Users excluded from test for lack of a second interaction.
    pub users_without_test: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutEvent {
    pub item: u32,
    pub rating: f64,
    pub timestamp: i64,
}

/// Moves each user's chronologically last interaction into the test set.
///
/// Timestamp ties are broken towards the larger item id so the split is
/// deterministic. Users with a single interaction keep it in train and get
/// no test entry; they are listed in `users_without_test`.
pub fn temporal_leave_one_out(log: &InteractionLog) -> Result<HoldoutSplit> {
    let num_users = log.num_users();
    let num_items = log.num_items();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); num_users];
    let mut last: Vec<Option<HoldoutEvent>> = vec![None; num_users];
    let mut per_user_count = vec![0usize; num_users];
    for event in log.events() {
        per_user_count[event.user as usize] += 1;
        let candidate = HoldoutEvent {
            item: event.item,
            rating: event.rating,
            timestamp: event.timestamp,
        };
        let slot = &mut last[event.user as usize];
        let replace = match slot {
            None => true,
            Some(kept) => {
                (candidate.timestamp, candidate.item) > (kept.timestamp, kept.item)
            }
        };
        if replace {
            *slot = Some(candidate);
        }
    }
    let mut users_without_test = Vec::new();
    for event in log.events() {
        let u = event.user as usize;
        let held = last[u];
        let is_held = matches!(held, Some(h) if h.item == event.item && per_user_count[u] >= 2);
        if !is_held {
            rows[u].push((event.item, 1.0));
        }
    }
    for u in 0..num_users {
        if per_user_count[u] < 2 {
            last[u] = None;
            users_without_test.push(u as u32);
        }
    }
    let train = SparseInteractionMatrix::from_rows(rows, num_users, num_items)?;
    Ok(HoldoutSplit {
        train,
        holdout: last,
        users_without_test,
    })
}

/// Draws `n` distinct negatives per test user, uniformly without replacement
/// from the items absent from both the user's train row and the positive.
///
/// Each user's draw is seeded from `(seed, user)` so the result is
/// reproducible and independent of evaluation order.
pub fn sample_test_negatives(split: &HoldoutSplit, n: usize, seed: u64) -> Result<EvaluationPack> {
    let num_items = split.train.num_items() as u32;
    let mut test = Vec::with_capacity(split.holdout.len());
    for (u, held) in split.holdout.iter().enumerate() {
        let Some(held) = held else {
            test.push(None);
            continue;
        };
        let user = u as u32;
        let consumed = split.train.row(user);
        let mut eligible: Vec<u32> = (0..num_items)
            .filter(|&i| i != held.item && consumed.binary_search(&i).is_err())
            .collect();
        if eligible.len() < n {
            return Err(Error::Protocol {
                user,
                message: format!(
                    "only {} non-consumed items available, need {n} negatives",
                    eligible.len()
                ),
            });
        }
        let mut rng = per_user_rng(seed, user);
        let negatives = draw_without_replacement(&mut eligible, n, &mut rng);
        test.push(Some(TestEntry {
            item: held.item,
            rating: held.rating,
            timestamp: held.timestamp,
            negatives,
        }));
    }
    let pack = EvaluationPack {
        train: Arc::new(split.train.clone()),
        test,
        candidate_count: n + 1,
    };
    pack.validate()?;
    Ok(pack)
}

fn per_user_rng(seed: u64, user: u32) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&user.to_le_bytes());
    key[12] = 0x5e; // domain tag: test-negative sampling
    ChaCha20Rng::from_seed(key)
}

/// Partial Fisher-Yates: the first `n` slots end up holding a uniform sample
/// without replacement.
fn draw_without_replacement(pool: &mut [u32], n: usize, rng: &mut ChaCha20Rng) -> Vec<u32> {
    use rand::Rng;
    let len = pool.len();
    for slot in 0..n {
        let pick = rng.gen_range(slot..len);
        pool.swap(slot, pick);
    }
    pool[..n].to_vec()
}
