//! Build an evaluation pack from a raw rating log: binarize, hold out each
//! user's last interaction, sample test negatives, and write the split in
//! the three-file format.
//!
//! Run with: `cargo run --example prepare_split`

use recbench::data::{
    load_ncf_split, sample_test_negatives, temporal_leave_one_out, write_ncf_split,
    InteractionLog,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (user, item, rating, timestamp) events; ids may be arbitrary integers
    // and are remapped to contiguous zero-based indices.
    let raw = vec![
        (10u64, 100u64, 5.0, 1_000i64),
        (10, 101, 4.0, 1_010),
        (10, 102, 2.0, 1_020),
        (10, 103, 5.0, 1_030),
        (20, 100, 3.0, 2_000),
        (20, 104, 4.0, 2_010),
        (20, 105, 5.0, 2_020),
        (30, 101, 4.0, 3_000),
        (30, 104, 5.0, 3_010),
        (30, 106, 4.0, 3_020),
    ];
    let log = InteractionLog::from_raw_events(raw)?;
    println!(
        "loaded {} events over {} users and {} items",
        log.events().len(),
        log.num_users(),
        log.num_items()
    );

    // keep ratings >= 3 as implicit positives
    let implicit = log.binarize(3.0);
    println!("after binarization: {} events", implicit.events().len());

    let split = temporal_leave_one_out(&implicit)?;
    for (user, held) in split.holdout.iter().enumerate() {
        match held {
            Some(event) => println!(
                "user {user}: held out item {} (timestamp {})",
                event.item, event.timestamp
            ),
            None => println!("user {user}: too few interactions, kept fully in train"),
        }
    }

    // two fresh negatives per user, reproducible from the seed
    let pack = sample_test_negatives(&split, 2, 42)?;
    println!("candidate count: {}", pack.candidate_count);

    let dir = tempfile::tempdir()?;
    write_ncf_split(&pack, dir.path(), "demo")?;
    let reloaded = load_ncf_split(dir.path(), "demo")?;
    assert_eq!(pack.train, reloaded.train);
    println!(
        "split written to {} and reloaded identically",
        dir.path().display()
    );
    Ok(())
}
