//! Rank the bundled toy split with the popularity baseline and print all
//! seventeen metrics.
//!
//! Run with: `cargo run --example rank_and_metrics`

use std::path::Path;

use recbench::data::{load_ncf_split, popularity_profile};
use recbench::eval::{evaluate_model, rank_candidates};
use recbench::models::fit_mostpop;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let pack = load_ncf_split(&dir, "toy")?;
    let profile = popularity_profile(&pack.train, 0.2)?;
    let model = fit_mostpop(pack.train.clone());

    for user in pack.test_users() {
        let ranked = rank_candidates(&model, &pack, user, 3)?;
        println!(
            "user {user}: top-3 {:?}, positive ranked {}",
            ranked.items, ranked.positive_rank
        );
    }

    let eval = evaluate_model("mostpop", &model, &pack, &profile, 3)?;
    println!("\naccuracy over {} users:", eval.accuracy_mean.user_count);
    for (metric, value) in &eval.accuracy_mean.means {
        println!("  {metric:>5}: {value:.4}");
    }
    println!("novelty:   epc {:.4}, efd {:.4}", eval.novelty.epc, eval.novelty.efd);
    println!(
        "diversity: ic {}, gini {:.4}, entropy {:.4} bits",
        eval.diversity.item_coverage, eval.diversity.gini, eval.diversity.entropy_bits
    );
    println!(
        "bias:      aclt {:.4}, aplt {:.4}, arp {:.4}, rsp {:?}, reo {:?}",
        eval.bias.aclt, eval.bias.aplt, eval.bias.arp, eval.bias.pop_rsp, eval.bias.pop_reo
    );
    Ok(())
}
