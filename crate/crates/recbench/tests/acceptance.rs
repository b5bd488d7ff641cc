#![allow(clippy::needless_range_loop)]
#![allow(clippy::type_complexity)]
#![allow(clippy::too_many_arguments)]

//! Acceptance suite: one test per criterion, each printing a PASS / SKIP
//! line (failures abort the test as usual).
//!
//! Criteria 1-6 replicate published MovieLens-1M numbers and need the
//! reference split files (`ml-1m.train.rating`, `ml-1m.test.rating`,
//! `ml-1m.test.negative`). Place them under `data/ml-1m/` at the repository
//! root or point `RECBENCH_ML1M_DIR` at them; without the files those
//! criteria skip. Criteria 7-10 run on committed fixtures and always
//! execute.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use recbench::data::{EvaluationPack, PopularityProfile, SparseInteractionMatrix, TestEntry};
use recbench::eval::{
    accuracy_per_user, aggregate, bias_metrics, diversity_metrics, evaluate_model,
    novelty_metrics, rank_with, ModelEvaluation, RankedList,
};
use recbench::harness::{ExperimentConfig, SplitConfig};
use recbench::models::{
    fit_mostpop, mf_example_gradients, neumf_batch_gradients, neumf_batch_loss, MfParams,
    NeuMfParams,
};
use recbench::stats::{paired_t_test, two_sided_p};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------------------
// ML1M plumbing (criteria 1-6)
// ---------------------------------------------------------------------------

fn ml1m_config() -> Option<ExperimentConfig> {
    let mut config = ExperimentConfig::load(repo_root().join("configs/ml1m.json")).ok()?;
    if let Ok(dir) = std::env::var("RECBENCH_ML1M_DIR") {
        config.dataset.split = SplitConfig::NcfSplit { dir: dir.into() };
    }
    let SplitConfig::NcfSplit { dir } = &config.dataset.split else {
        return None;
    };
    for suffix in ["train.rating", "test.rating", "test.negative"] {
        if !dir.join(format!("ml-1m.{suffix}")).exists() {
            return None;
        }
    }
    Some(config)
}

struct Ml1m {
    config: ExperimentConfig,
    pack: EvaluationPack,
    profile: PopularityProfile,
}

fn ml1m() -> &'static Option<Ml1m> {
    static CELL: OnceLock<Option<Ml1m>> = OnceLock::new();
    CELL.get_or_init(|| {
        let config = ml1m_config()?;
        let (pack, profile) = config.load_dataset().ok()?;
        Some(Ml1m {
            config,
            pack,
            profile,
        })
    })
}

fn ml1m_mostpop() -> &'static Option<ModelEvaluation> {
    static CELL: OnceLock<Option<ModelEvaluation>> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = ml1m().as_ref()?;
        let model = fit_mostpop(data.pack.train.clone());
        evaluate_model("mostpop", &model, &data.pack, &data.profile, 10).ok()
    })
}

fn skip(criterion: &str) {
    println!(
        "criterion {criterion}: SKIP (ml-1m split not found; see README to fetch it, \
         or set RECBENCH_ML1M_DIR)"
    );
}

#[test]
fn criterion_01_table1_mostpop_anchor() {
    let Some(_) = ml1m().as_ref() else {
        skip("01 deterministic Table 1 anchor");
        return;
    };
    let started = std::time::Instant::now();
    let eval = ml1m_mostpop().as_ref().expect("mostpop evaluation");
    let hr = eval.accuracy_mean.means["hr"];
    let ndcg = eval.accuracy_mean.means["ndcg"];
    let elapsed = started.elapsed().as_secs_f64();
    assert!((hr - 0.4535).abs() <= 0.0005, "HR@10 = {hr}");
    assert!((ndcg - 0.2542).abs() <= 0.0005, "nDCG@10 = {ndcg}");
    assert!(elapsed < 60.0, "took {elapsed:.1}s, budget 60s");
    println!("criterion 01 deterministic Table 1 anchor: PASS (hr {hr:.4}, ndcg {ndcg:.4})");
}

#[test]
fn criterion_02_table3_mostpop_anchor() {
    let Some(_) = ml1m().as_ref() else {
        skip("02 deterministic Table 3 anchor");
        return;
    };
    let eval = ml1m_mostpop().as_ref().expect("mostpop evaluation");
    let m = &eval.accuracy_mean.means;
    for (metric, expected) in [
        ("f1", 0.0825),
        ("lauc", 0.4531),
        ("map", 0.0647),
        ("mar", 0.3072),
        ("mrr", 0.1937),
    ] {
        let got = m[metric];
        assert!(
            (got - expected).abs() <= 0.0005,
            "{metric} = {got}, expected {expected} +- 0.0005"
        );
    }
    println!(
        "criterion 02 deterministic Table 3 anchor: PASS (f1 {:.4}, lauc {:.4}, map {:.4}, mar {:.4}, mrr {:.4})",
        m["f1"], m["lauc"], m["map"], m["mar"], m["mrr"]
    );
}

#[test]
fn criterion_03_fig4_fig5_mostpop_anchors() {
    let Some(_) = ml1m().as_ref() else {
        skip("03 deterministic Fig. 4/5 anchors");
        return;
    };
    let eval = ml1m_mostpop().as_ref().expect("mostpop evaluation");
    assert_eq!(eval.diversity.item_coverage, 975, "IC must be exact");
    let gini = eval.diversity.gini;
    assert!((gini - 0.1272).abs() <= 0.001, "gini = {gini}");
    let se = eval.diversity.entropy_bits;
    assert!((se - 9.209).abs() <= 0.005, "se = {se}");
    let epc = eval.novelty.epc;
    assert!((epc - 0.0417).abs() <= 0.001, "epc = {epc}");
    let efd = eval.novelty.efd;
    assert!((efd - 0.5297).abs() <= 0.005, "efd = {efd}");
    let aclt = eval.bias.aclt;
    assert!((aclt - 0.00132).abs() <= 1e-4, "aclt = {aclt}");
    assert_eq!(eval.bias.aplt, aclt / 10.0, "aplt must equal aclt/10 exactly");
    let arp = eval.bias.arp;
    assert!((arp - 1065.9).abs() <= 1.0, "arp = {arp}");
    assert_eq!(eval.bias.pop_reo, Some(1.0), "pop_reo must be exactly 1");
    let rsp = eval.bias.pop_rsp.expect("pop_rsp defined");
    assert!((rsp - 0.9999).abs() <= 0.001, "pop_rsp = {rsp}");
    println!(
        "criterion 03 deterministic Fig. 4/5 anchors: PASS (ic {}, gini {gini:.4}, se {se:.3}, epc {epc:.4}, efd {efd:.4}, aclt {aclt:.5}, arp {arp:.1}, rsp {rsp:.4})",
        eval.diversity.item_coverage
    );
}

#[test]
fn criterion_04_closed_form_baselines() {
    let Some(data) = ml1m().as_ref() else {
        skip("04 closed-form baselines");
        return;
    };
    let started = std::time::Instant::now();
    let specs = data.config.model_specs().expect("specs");
    let mut results = Vec::new();
    for (name, expected_ndcg, expected_hr) in
        [("ease", 0.4494, 0.7192), ("rp3beta", 0.4011, 0.6758)]
    {
        let spec = specs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .expect("configured");
        let model = spec.fit(&data.pack).expect("fit");
        let eval = evaluate_model(name, &model, &data.pack, &data.profile, 10).expect("eval");
        let ndcg = eval.accuracy_mean.means["ndcg"];
        let hr = eval.accuracy_mean.means["hr"];
        assert!(
            (ndcg - expected_ndcg).abs() <= 0.002,
            "{name} ndcg = {ndcg}, expected {expected_ndcg} +- 0.002"
        );
        assert!(
            (hr - expected_hr).abs() <= 0.002,
            "{name} hr = {hr}, expected {expected_hr} +- 0.002"
        );
        results.push(format!("{name} ndcg {ndcg:.4} hr {hr:.4}"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "took {elapsed:.0}s, budget 30 min");
    println!(
        "criterion 04 closed-form baselines: PASS ({}; {elapsed:.0}s)",
        results.join(", ")
    );
}

struct StochasticRun {
    hr: f64,
    ndcg: f64,
    ndcg_per_user: Vec<f64>,
}

struct StochasticResults {
    mf: Vec<StochasticRun>,
    neumf: Vec<StochasticRun>,
}

/// Three seeds per stochastic model, shared between criteria 5 and 6.
fn ml1m_stochastic() -> &'static Option<StochasticResults> {
    static CELL: OnceLock<Option<StochasticResults>> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = ml1m().as_ref()?;
        let specs = data.config.model_specs().ok()?;
        let mut out = StochasticResults {
            mf: Vec::new(),
            neumf: Vec::new(),
        };
        for name in ["mf", "neumf"] {
            let base = specs.iter().find(|(n, _)| n == name)?.1.clone();
            for seed in [42u64, 43, 44] {
                let spec = base.clone().with_seed(seed);
                let model = spec.fit(&data.pack).ok()?;
                let eval =
                    evaluate_model(name, &model, &data.pack, &data.profile, 10).ok()?;
                let run = StochasticRun {
                    hr: eval.accuracy_mean.means["hr"],
                    ndcg: eval.accuracy_mean.means["ndcg"],
                    ndcg_per_user: eval.per_user_metric("ndcg").unwrap(),
                };
                if name == "mf" {
                    out.mf.push(run);
                } else {
                    out.neumf.push(run);
                }
            }
        }
        Some(out)
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

#[test]
fn criterion_05_stochastic_models() {
    let Some(results) = ml1m_stochastic().as_ref() else {
        skip("05 stochastic models (3 seeds, median)");
        return;
    };
    let mut mf_ndcg: Vec<f64> = results.mf.iter().map(|r| r.ndcg).collect();
    let mut mf_hr: Vec<f64> = results.mf.iter().map(|r| r.hr).collect();
    let ndcg = median(&mut mf_ndcg);
    let hr = median(&mut mf_hr);
    assert!((ndcg - 0.4545).abs() <= 0.010, "mf median ndcg = {ndcg}");
    assert!((hr - 0.7310).abs() <= 0.010, "mf median hr = {hr}");
    let mut neumf_hr: Vec<f64> = results.neumf.iter().map(|r| r.hr).collect();
    let nhr = median(&mut neumf_hr);
    assert!((nhr - 0.691).abs() <= 0.015, "neumf median hr = {nhr}");
    println!(
        "criterion 05 stochastic models: PASS (mf ndcg {ndcg:.4} hr {hr:.4}, neumf hr {nhr:.4}; \
         pinterest-scale replication is heavy and documented as a manual run)"
    );
}

#[test]
fn criterion_06_ordering_and_significance() {
    let Some(results) = ml1m_stochastic().as_ref() else {
        skip("06 ordering and MF-vs-NeuMF significance");
        return;
    };
    let mf = &results.mf[0];
    let neumf = &results.neumf[0];
    assert!(
        mf.hr > neumf.hr,
        "MF must outrank NeuMF on HR@10: {} vs {}",
        mf.hr,
        neumf.hr
    );
    assert!(
        mf.ndcg > neumf.ndcg,
        "MF must outrank NeuMF on nDCG@10: {} vs {}",
        mf.ndcg,
        neumf.ndcg
    );
    let t = paired_t_test(&mf.ndcg_per_user, &neumf.ndcg_per_user).expect("t-test");
    assert!(t.p < 0.05, "paired t-test p = {}", t.p);
    println!(
        "criterion 06 ordering and significance: PASS (mf {:.4}/{:.4} vs neumf {:.4}/{:.4}, p {:.2e})",
        mf.ndcg, mf.hr, neumf.ndcg, neumf.hr, t.p
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: exhaustive metric oracle
// ---------------------------------------------------------------------------

/// Independent brute-force reimplementation of every metric, computed from
/// raw candidate scores and set arithmetic. General formulations only: DCG
/// over gain vectors, precision/recall loops, explicit group probabilities.
mod brute {
    use std::collections::{HashMap, HashSet};

    pub struct Instance {
        pub catalog: usize,
        pub trains: Vec<Vec<u32>>,
        /// per user: (candidate ids, scores, positive id)
        pub users: Vec<(Vec<u32>, Vec<f64>, u32)>,
        pub head: HashSet<u32>,
        pub counts: Vec<u64>,
        pub k: usize,
    }

    pub struct Metrics {
        pub hr: f64,
        pub ndcg: f64,
        pub mrr: f64,
        pub map: f64,
        pub mar: f64,
        pub f1: f64,
        pub lauc: f64,
        pub epc: f64,
        pub efd: f64,
        pub ic: usize,
        pub gini: f64,
        pub se: f64,
        pub aclt: f64,
        pub aplt: f64,
        pub arp: f64,
        pub rsp: Option<f64>,
        pub reo: Option<f64>,
    }

    fn sorted_candidates(ids: &[u32], scores: &[f64]) -> Vec<u32> {
        // selection sort by (score desc, id asc), deliberately naive
        let mut remaining: Vec<usize> = (0..ids.len()).collect();
        let mut out = Vec::new();
        while !remaining.is_empty() {
            let mut best = 0;
            for i in 1..remaining.len() {
                let (a, b) = (remaining[i], remaining[best]);
                if scores[a] > scores[b] || (scores[a] == scores[b] && ids[a] < ids[b]) {
                    best = i;
                }
            }
            out.push(ids[remaining.remove(best)]);
        }
        out
    }

    pub fn compute(instance: &Instance) -> Metrics {
        let k = instance.k;
        let n_users = instance.users.len() as f64;
        let num_users_train = instance.trains.len() as f64;
        let total_events: u64 = instance.counts.iter().sum();

        let mut lists: Vec<Vec<u32>> = Vec::new();
        let mut ranks: Vec<usize> = Vec::new();
        for (ids, scores, positive) in &instance.users {
            let order = sorted_candidates(ids, scores);
            let rank = order.iter().position(|i| i == positive).unwrap() + 1;
            ranks.push(rank);
            lists.push(order[..k.min(order.len())].to_vec());
        }

        // accuracy via general formulations
        let (mut hr, mut ndcg, mut mrr, mut map, mut mar, mut f1, mut lauc) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (u, ((_, _, positive), list)) in
            instance.users.iter().zip(&lists).enumerate()
        {
            let gains: Vec<f64> = list
                .iter()
                .map(|i| if i == positive { 1.0 } else { 0.0 })
                .collect();
            let hit = gains.iter().any(|&g| g > 0.0);
            hr += if hit { 1.0 } else { 0.0 };
            let dcg: f64 = gains
                .iter()
                .enumerate()
                .map(|(pos, g)| g / ((pos + 2) as f64).log2())
                .sum();
            let idcg = 1.0; // one relevant item
            ndcg += dcg / idcg;
            if let Some(pos) = gains.iter().position(|&g| g > 0.0) {
                mrr += 1.0 / (pos + 1) as f64;
            }
            // precision/recall at every cutoff
            let mut p_sum = 0.0;
            let mut r_sum = 0.0;
            for j in 1..=k {
                let hits: f64 = gains.iter().take(j).sum();
                p_sum += hits / j as f64;
                r_sum += hits / 1.0;
            }
            map += p_sum / k as f64;
            mar += r_sum / k as f64;
            let p_k: f64 = gains.iter().sum::<f64>() / k as f64;
            let r_k: f64 = gains.iter().sum::<f64>();
            if p_k + r_k > 0.0 {
                f1 += 2.0 * p_k * r_k / (p_k + r_k);
            }
            let pool = instance.catalog - instance.trains[u].len();
            if let Some(pos) = gains.iter().position(|&g| g > 0.0) {
                lauc += 1.0 - pos as f64 / pool as f64;
            }
        }

        // novelty (relevance-weighted, discount-normalized)
        let (mut epc, mut efd) = (0.0, 0.0);
        for ((_, _, positive), list) in instance.users.iter().zip(&lists) {
            let norm: f64 = (0..list.len()).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
            for (pos, item) in list.iter().enumerate() {
                if item == positive {
                    let disc = 1.0 / ((pos + 2) as f64).log2();
                    let count = instance.counts[*item as usize].max(1) as f64;
                    epc += disc * (1.0 - count / num_users_train) / norm;
                    efd += disc * -(count / total_events as f64).log2() / norm;
                }
            }
        }

        // diversity
        let mut rec_counts: HashMap<u32, u64> = HashMap::new();
        let mut slots = 0u64;
        for list in &lists {
            for &item in list {
                *rec_counts.entry(item).or_insert(0) += 1;
                slots += 1;
            }
        }
        let ic = rec_counts.len();
        let mut full: Vec<u64> = (0..instance.catalog as u32)
            .map(|i| rec_counts.get(&i).copied().unwrap_or(0))
            .collect();
        full.sort_unstable();
        let n = instance.catalog as f64;
        let mut gini_sum = 0.0;
        for (idx, &c) in full.iter().enumerate() {
            gini_sum += (2.0 * (idx + 1) as f64 - n - 1.0) * (c as f64 / slots as f64);
        }
        let gini = 1.0 - gini_sum / (n - 1.0);
        let se: f64 = rec_counts
            .values()
            .map(|&c| {
                let p = c as f64 / slots as f64;
                -p * p.log2()
            })
            .sum();

        // bias
        let mut aclt = 0.0;
        let mut arp = 0.0;
        let mut rec = [0u64; 2];
        let mut elig = [0u64; 2];
        let mut hits = [0u64; 2];
        let mut positives = [0u64; 2];
        let head_size = instance.head.len() as u64;
        let tail_size = instance.catalog as u64 - head_size;
        for (u, ((_, _, positive), list)) in instance.users.iter().zip(&lists).enumerate()
        {
            let train: HashSet<u32> = instance.trains[u].iter().copied().collect();
            let mut tail_count = 0;
            let mut pop = 0.0;
            for &item in list {
                if !instance.head.contains(&item) {
                    tail_count += 1;
                }
                pop += instance.counts[item as usize] as f64;
                if !train.contains(&item) {
                    let g = usize::from(!instance.head.contains(&item));
                    rec[g] += 1;
                }
            }
            aclt += tail_count as f64;
            arp += pop / list.len() as f64;
            let train_head = train.iter().filter(|i| instance.head.contains(i)).count() as u64;
            elig[0] += head_size - train_head;
            elig[1] += tail_size - (train.len() as u64 - train_head);
            let g = usize::from(!instance.head.contains(positive));
            positives[g] += 1;
            if lists[u].contains(positive) {
                hits[g] += 1;
            }
        }
        let dispersion = |num: [u64; 2], den: [u64; 2]| -> Option<f64> {
            if den[0] == 0 || den[1] == 0 {
                return None;
            }
            let p0 = num[0] as f64 / den[0] as f64;
            let p1 = num[1] as f64 / den[1] as f64;
            let mean = (p0 + p1) / 2.0;
            if mean == 0.0 {
                return None;
            }
            let var = ((p0 - mean).powi(2) + (p1 - mean).powi(2)) / 2.0;
            Some(var.sqrt() / mean)
        };

        Metrics {
            hr: hr / n_users,
            ndcg: ndcg / n_users,
            mrr: mrr / n_users,
            map: map / n_users,
            mar: mar / n_users,
            f1: f1 / n_users,
            lauc: lauc / n_users,
            epc: epc / n_users,
            efd: efd / n_users,
            ic,
            gini,
            se,
            aclt: aclt / n_users,
            aplt: aclt / n_users / k as f64,
            arp: arp / n_users,
            rsp: dispersion(rec, elig),
            reo: dispersion(hits, positives),
        }
    }
}

/// Five users over a 13-item catalog; candidates cover both popularity
/// groups so every bias probability is exercised.
fn oracle_instance_base() -> (Arc<SparseInteractionMatrix>, Vec<(u32, Vec<u32>)>, usize) {
    let trains: Vec<Vec<u32>> = vec![
        vec![0, 1],
        vec![0, 2],
        vec![1, 3],
        vec![0, 5],
        vec![2, 6],
    ];
    let catalog = 13;
    let rows = trains
        .iter()
        .map(|r| r.iter().map(|&i| (i, 1.0)).collect())
        .collect();
    let train = Arc::new(SparseInteractionMatrix::from_rows(rows, 5, catalog).unwrap());
    // (positive, negatives): disjoint from the user's train row
    let candidates: Vec<(u32, Vec<u32>)> = vec![
        (5, vec![6, 7, 8, 9, 10, 11, 12]),
        (6, vec![5, 7, 8, 9, 10, 11, 12]),
        (2, vec![5, 6, 7, 8, 9, 10, 12]),
        (7, vec![1, 2, 8, 9, 10, 11, 12]),
        (8, vec![0, 1, 3, 9, 10, 11, 12]),
    ];
    (train, candidates, catalog)
}

/// Assigns strictly decreasing scores so the positive lands at `rank`
/// (1-based) while the negatives keep their id order.
fn scores_for_rank(positive: u32, negatives: &[u32], rank: usize) -> Vec<(u32, f64)> {
    let mut order: Vec<u32> = negatives.to_vec();
    order.insert(rank - 1, positive);
    order
        .iter()
        .enumerate()
        .map(|(pos, &item)| (item, (order.len() - pos) as f64))
        .collect()
}

#[test]
fn criterion_07_metric_oracle_suite() {
    let (train, candidates, catalog) = oracle_instance_base();
    let profile = recbench::data::popularity_profile(&train, 0.2).unwrap();
    let head: std::collections::HashSet<u32> = (0..catalog as u32)
        .filter(|&i| profile.is_head(i))
        .collect();
    let counts = train.item_counts();
    let trains: Vec<Vec<u32>> = (0..5u32).map(|u| train.row(u).to_vec()).collect();
    let num_candidates = 8;
    let tol = 1e-12;

    let mut checked = 0usize;
    for k in [3usize, 5] {
        // exhaustive rank placements for all five users
        let mut ranks = [1usize; 5];
        loop {
            // build the pack and the per-user score tables
            let mut test = Vec::new();
            let mut score_tables: Vec<std::collections::HashMap<u32, f64>> = Vec::new();
            let mut brute_users = Vec::new();
            for (u, (positive, negatives)) in candidates.iter().enumerate() {
                let assignment = scores_for_rank(*positive, negatives, ranks[u]);
                let table: std::collections::HashMap<u32, f64> =
                    assignment.iter().copied().collect();
                let mut ids = vec![*positive];
                ids.extend_from_slice(negatives);
                let scores: Vec<f64> = ids.iter().map(|i| table[i]).collect();
                brute_users.push((ids, scores, *positive));
                score_tables.push(table);
                test.push(Some(TestEntry {
                    item: *positive,
                    rating: 1.0,
                    timestamp: 0,
                    negatives: negatives.clone(),
                }));
            }
            let pack = EvaluationPack {
                train: Arc::clone(&train),
                test,
                candidate_count: num_candidates,
            };

            // pipeline route
            let ranked: Vec<RankedList> = (0..5u32)
                .map(|u| {
                    rank_with(
                        |user, items| {
                            Ok(items
                                .iter()
                                .map(|i| score_tables[user as usize][i])
                                .collect())
                        },
                        &pack,
                        u,
                        k,
                    )
                    .unwrap()
                })
                .collect();
            let accuracy: Vec<_> = ranked
                .iter()
                .zip(&trains)
                .map(|(list, t)| accuracy_per_user(list, k, catalog - t.len()).unwrap())
                .collect();
            let agg = aggregate(&accuracy).unwrap();
            let nov = novelty_metrics(&ranked, &profile, k).unwrap();
            let div = diversity_metrics(&ranked, catalog, k).unwrap();
            let bias = bias_metrics(&ranked, &profile, &pack, k).unwrap();

            // independent brute-force route
            let instance = brute::Instance {
                catalog,
                trains: trains.clone(),
                users: brute_users,
                head: head.clone(),
                counts: counts.clone(),
                k,
            };
            let oracle = brute::compute(&instance);

            let close = |a: f64, b: f64, name: &str| {
                assert!(
                    (a - b).abs() < tol,
                    "k={k} ranks={ranks:?} {name}: pipeline {a} vs oracle {b}"
                );
            };
            close(agg.means["hr"], oracle.hr, "hr");
            close(agg.means["ndcg"], oracle.ndcg, "ndcg");
            close(agg.means["mrr"], oracle.mrr, "mrr");
            close(agg.means["map"], oracle.map, "map");
            close(agg.means["mar"], oracle.mar, "mar");
            close(agg.means["f1"], oracle.f1, "f1");
            close(agg.means["lauc"], oracle.lauc, "lauc");
            close(nov.epc, oracle.epc, "epc");
            close(nov.efd, oracle.efd, "efd");
            assert_eq!(div.item_coverage, oracle.ic, "ic");
            close(div.gini, oracle.gini, "gini");
            close(div.entropy_bits, oracle.se, "se");
            close(bias.aclt, oracle.aclt, "aclt");
            close(bias.aplt, oracle.aplt, "aplt");
            close(bias.arp, oracle.arp, "arp");
            match (bias.pop_rsp, oracle.rsp) {
                (Some(a), Some(b)) => close(a, b, "rsp"),
                (None, None) => {}
                other => panic!("rsp definedness differs: {other:?}"),
            }
            match (bias.pop_reo, oracle.reo) {
                (Some(a), Some(b)) => close(a, b, "reo"),
                (None, None) => {}
                other => panic!("reo definedness differs: {other:?}"),
            }
            checked += 1;

            // next rank combination
            let mut carry = 0;
            loop {
                ranks[carry] += 1;
                if ranks[carry] <= num_candidates {
                    break;
                }
                ranks[carry] = 1;
                carry += 1;
                if carry == 5 {
                    break;
                }
            }
            if carry == 5 {
                break;
            }
        }
    }
    assert_eq!(checked, 2 * 8usize.pow(5));

    // single-relevant identities for every rank over the full 101-candidate
    // range at k = 10
    for r in 1..=101usize {
        let list = RankedList {
            user: 0,
            items: vec![],
            scores: vec![],
            positive_rank: r,
        };
        let a = accuracy_per_user(&list, 10, 3600).unwrap();
        assert!((a.f1 - 2.0 * a.hr / 11.0).abs() < tol);
        assert!(a.map <= a.mrr + tol);
        assert!(a.mrr <= a.hr + tol);
    }
    println!("criterion 07 metric oracle suite: PASS ({checked} exhaustive instances)");
}

// ---------------------------------------------------------------------------
// Criterion 8: gradient suite
// ---------------------------------------------------------------------------

fn rel_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-2)
}

#[test]
fn criterion_08_gradient_suite() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(80);
    let h = 1e-3;
    let max_rel = 1e-4;

    // MF: 100 random draws, checking every touched coordinate.
    let mut mf_checked = 0usize;
    for draw in 0..100 {
        let dim = 2 + (draw % 5);
        let (users, items) = (3usize, 4usize);
        let mut params = MfParams::zeros(users, items, dim);
        for w in params
            .user_emb
            .iter_mut()
            .chain(params.item_emb.iter_mut())
            .chain(params.user_bias.iter_mut())
            .chain(params.item_bias.iter_mut())
        {
            *w = rng.gen_range(-1.0..1.0);
        }
        params.global_bias = rng.gen_range(-1.0..1.0);
        let u = rng.gen_range(0..users) as u32;
        let i = rng.gen_range(0..items) as u32;
        let y = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let l2 = [0.0, 0.001, 0.01][draw % 3];
        let (_, grads) = mf_example_gradients(&params, u, i, y, l2);

        let loss = |p: &MfParams| mf_example_gradients(p, u, i, y, l2).0;
        for f in 0..dim {
            let idx = u as usize * dim + f;
            let mut probe = params.clone();
            probe.user_emb[idx] += h;
            let up = loss(&probe);
            probe.user_emb[idx] -= 2.0 * h;
            let down = loss(&probe);
            let fd = (up - down) / (2.0 * h);
            assert!(
                rel_err(grads.d_user[f], fd) < max_rel,
                "draw {draw} user emb[{f}]: {} vs fd {fd}",
                grads.d_user[f]
            );
            mf_checked += 1;

            let idx = i as usize * dim + f;
            let mut probe = params.clone();
            probe.item_emb[idx] += h;
            let up = loss(&probe);
            probe.item_emb[idx] -= 2.0 * h;
            let down = loss(&probe);
            let fd = (up - down) / (2.0 * h);
            assert!(
                rel_err(grads.d_item[f], fd) < max_rel,
                "draw {draw} item emb[{f}]: {} vs fd {fd}",
                grads.d_item[f]
            );
            mf_checked += 1;
        }
        for (slot, analytic) in [
            ("user_bias", grads.d_user_bias),
            ("item_bias", grads.d_item_bias),
            ("global_bias", grads.d_global_bias),
        ] {
            let mut up_p = params.clone();
            let mut down_p = params.clone();
            match slot {
                "user_bias" => {
                    up_p.user_bias[u as usize] += h;
                    down_p.user_bias[u as usize] -= h;
                }
                "item_bias" => {
                    up_p.item_bias[i as usize] += h;
                    down_p.item_bias[i as usize] -= h;
                }
                _ => {
                    up_p.global_bias += h;
                    down_p.global_bias -= h;
                }
            }
            let fd = (loss(&up_p) - loss(&down_p)) / (2.0 * h);
            assert!(
                rel_err(analytic, fd) < max_rel,
                "draw {draw} {slot}: {analytic} vs fd {fd}"
            );
            mf_checked += 1;
        }
    }

    // NeuMF: 100 accepted draws over every parameter coordinate. Draws
    // whose hidden pre-activations sit within 5e-3 of a ReLU kink are
    // redrawn, since central differences straddle the kink there.
    let (users, items, f) = (3usize, 4usize, 2usize);
    let mut neumf_checked = 0usize;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < 100 {
        attempts += 1;
        assert!(attempts < 2000, "kink filter rejected too many draws");
        let seed = 8000 + attempts as u64;
        let mut params = NeuMfParams::init(users, items, f, seed);
        let mut prng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        for w in params
            .gmf_user
            .iter_mut()
            .chain(params.gmf_item.iter_mut())
            .chain(params.mlp_user.iter_mut())
            .chain(params.mlp_item.iter_mut())
        {
            *w = prng.gen_range(-0.8..0.8);
        }
        let batch: Vec<(u32, u32, f64)> = (0..4)
            .map(|_| {
                (
                    prng.gen_range(0..users) as u32,
                    prng.gen_range(0..items) as u32,
                    if prng.gen_bool(0.5) { 1.0 } else { 0.0 },
                )
            })
            .collect();
        let l2 = [0.0, 0.01][attempts % 2];
        if min_preactivation_gap(&params, &batch, f) < 5e-3 {
            continue;
        }
        accepted += 1;
        let (_, grads) = neumf_batch_gradients(&params, &batch, l2);

        let mut check =
            |get: &dyn Fn(&NeuMfParams) -> f64,
             set: &dyn Fn(&mut NeuMfParams, f64),
             analytic: f64,
             label: &str| {
                let mut probe = params.clone();
                let orig = get(&probe);
                set(&mut probe, orig + h);
                let up = neumf_batch_loss(&probe, &batch, l2);
                set(&mut probe, orig - h);
                let down = neumf_batch_loss(&probe, &batch, l2);
                let fd = (up - down) / (2.0 * h);
                assert!(
                    rel_err(analytic, fd) < max_rel,
                    "seed {seed} {label}: analytic {analytic} vs fd {fd}"
                );
                neumf_checked += 1;
            };

        macro_rules! check_tensor {
            ($field:ident, $sparse:expr) => {
                for idx in 0..params.$field.len() {
                    let analytic = match &$sparse {
                        Some(rows) => {
                            let width = params.$field.len() / match stringify!($field) {
                                "gmf_user" | "mlp_user" => users,
                                _ => items,
                            };
                            let row = (idx / width) as u32;
                            let off = idx % width;
                            rows.get(&row).map_or(0.0, |g: &Vec<f64>| g[off])
                        }
                        None => 0.0,
                    };
                    let analytic = if $sparse.is_none() {
                        grads_dense(&grads, stringify!($field))[idx]
                    } else {
                        analytic
                    };
                    check(
                        &|p: &NeuMfParams| p.$field[idx],
                        &|p: &mut NeuMfParams, v: f64| p.$field[idx] = v,
                        analytic,
                        &format!("{}[{idx}]", stringify!($field)),
                    );
                }
            };
        }
        fn grads_dense<'a>(
            grads: &'a recbench::models::NeuMfBatchGrads,
            name: &str,
        ) -> &'a [f64] {
            match name {
                "w1" => &grads.w1,
                "b1" => &grads.b1,
                "w2" => &grads.w2,
                "b2" => &grads.b2,
                "output" => &grads.output,
                _ => unreachable!(),
            }
        }
        check_tensor!(gmf_user, Some(&grads.gmf_user));
        check_tensor!(gmf_item, Some(&grads.gmf_item));
        check_tensor!(mlp_user, Some(&grads.mlp_user));
        check_tensor!(mlp_item, Some(&grads.mlp_item));
        check_tensor!(w1, None::<&std::collections::BTreeMap<u32, Vec<f64>>>);
        check_tensor!(b1, None::<&std::collections::BTreeMap<u32, Vec<f64>>>);
        check_tensor!(w2, None::<&std::collections::BTreeMap<u32, Vec<f64>>>);
        check_tensor!(b2, None::<&std::collections::BTreeMap<u32, Vec<f64>>>);
        check_tensor!(output, None::<&std::collections::BTreeMap<u32, Vec<f64>>>);
    }
    println!(
        "criterion 08 gradient suite: PASS ({mf_checked} mf coords, {neumf_checked} neumf coords over 100 draws each)"
    );
}

/// Smallest |pre-activation| across the tower for every example, computed
/// from the public tensors so the kink filter stays outside the library.
fn min_preactivation_gap(params: &NeuMfParams, batch: &[(u32, u32, f64)], f: usize) -> f64 {
    let mut min_gap = f64::MAX;
    for &(u, i, _) in batch {
        let mut z0 = Vec::with_capacity(4 * f);
        z0.extend_from_slice(&params.mlp_user[u as usize * 2 * f..(u as usize + 1) * 2 * f]);
        z0.extend_from_slice(&params.mlp_item[i as usize * 2 * f..(i as usize + 1) * 2 * f]);
        let mut a1 = vec![0.0; 2 * f];
        for o in 0..2 * f {
            let mut z = params.b1[o];
            for j in 0..4 * f {
                z += params.w1[o * 4 * f + j] * z0[j];
            }
            min_gap = min_gap.min(z.abs());
            a1[o] = z.max(0.0);
        }
        for o in 0..f {
            let mut z = params.b2[o];
            for j in 0..2 * f {
                z += params.w2[o * 2 * f + j] * a1[j];
            }
            min_gap = min_gap.min(z.abs());
        }
    }
    min_gap
}

// ---------------------------------------------------------------------------
// Criterion 9: t-test quadrature oracle
// ---------------------------------------------------------------------------

/// Adaptive Simpson integration.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Two-sided p from direct quadrature of the unnormalized t density; no
/// gamma functions anywhere, so the route is independent of the
/// incomplete-beta implementation.
fn p_quadrature(t: f64, dof: f64) -> f64 {
    let g = move |x: f64| (-(dof + 1.0) / 2.0 * (x * x / dof).ln_1p()).exp();
    let t_abs = t.abs();
    let head = simpson(&g, 0.0, t_abs, 1e-14 * t_abs.max(1.0));
    // substitute x = |t| + s/(1-s) to fold the tail into [0, 1]
    let tail_integrand = move |s: f64| {
        if s >= 1.0 {
            return if dof == 1.0 { 1.0 } else { 0.0 };
        }
        let x = t_abs + s / (1.0 - s);
        g(x) / ((1.0 - s) * (1.0 - s))
    };
    let tail = simpson(&tail_integrand, 0.0, 1.0, 1e-14);
    tail / (head + tail)
}

#[test]
fn criterion_09_t_test_oracle() {
    for n in [2usize, 5, 30, 1000] {
        let dof = (n - 1) as f64;
        for t in [0.0, 0.5, 2.0, 10.0] {
            let implementation = two_sided_p(t, dof);
            let oracle = p_quadrature(t, dof);
            assert!(
                (implementation - oracle).abs() < 1e-9,
                "n={n} t={t}: betai {implementation} vs quadrature {oracle}"
            );
        }
    }
    // degenerate zero-variance input yields p = 1 without error
    let a = vec![0.25; 6];
    let b = vec![0.25; 6];
    let r = paired_t_test(&a, &b).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.p, 1.0);
    println!("criterion 09 t-test oracle: PASS (16 grid points to 1e-9, degenerate p = 1)");
}

// ---------------------------------------------------------------------------
// Criterion 10: sequential determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_sequential_determinism() {
    let bin = env!("CARGO_BIN_EXE_recbench");
    let config = fixture("toy.json");
    let mut dirs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let status = std::process::Command::new(bin)
            .args([
                "compare",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.path().to_str().unwrap(),
                "--threads",
                "1",
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        dirs.push(out);
    }
    let mut names: Vec<String> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".tsv"))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across sequential runs");
    }
    println!(
        "criterion 10 sequential determinism: PASS ({} TSV reports byte-identical)",
        names.len()
    );
}
