//! Reader and writer for the NCF-style split file triple.
//!
//! A split directory holds three tab-separated files:
//! - `<name>.train.rating`: one event per line, `user \t item \t rating \t
//!   timestamp`, zero-based integer ids.
//! - `<name>.test.rating`: one line per test user, same four fields.
//! - `<name>.test.negative`: one line per test user, a literal `(user,item)`
//!   token followed by the tab-separated negative item ids.
//!
//! Ids are taken verbatim (no remapping); the item universe is the union of
//! the items in all three files so that items never seen in train still
//! belong to the catalog. The negative count per user must be uniform but is
//! otherwise unconstrained; publicly circulated splits carry 99 or 100
//! negatives depending on provenance, and the observed `candidate_count` is
//! recorded instead of assumed.

use std::collections::HashMap;
use std::sync::Arc;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::split::{EvaluationPack, TestEntry};
use super::sparse::SparseInteractionMatrix;
use crate::{Error, Result};

struct RawTrain {
    events: Vec<(u32, u32, f64, i64)>,
    max_user: u32,
    max_item: u32,
}

/// Loads the `<name>.train.rating` / `.test.rating` / `.test.negative`
/// triple from `dir` into an [`EvaluationPack`].
pub fn load_ncf_split(dir: impl AsRef<Path>, name: &str) -> Result<EvaluationPack> {
    let dir = dir.as_ref();
    let train_path = dir.join(format!("{name}.train.rating"));
    let test_path = dir.join(format!("{name}.test.rating"));
    let neg_path = dir.join(format!("{name}.test.negative"));

    let train = read_train(&train_path)?;
    let tests = read_test(&test_path)?;
    let negatives = read_negatives(&neg_path)?;

    let mut max_user = train.max_user;
    let mut max_item = train.max_item;
    for &(u, i, _, _) in &tests {
        max_user = max_user.max(u);
        max_item = max_item.max(i);
    }
    for ((u, i), negs) in &negatives {
        max_user = max_user.max(*u);
        max_item = max_item.max(*i);
        for &n in negs {
            max_item = max_item.max(n);
        }
    }
    let num_users = max_user as usize + 1;
    let num_items = max_item as usize + 1;

    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); num_users];
    for (u, i, _, _) in &train.events {
        rows[*u as usize].push((*i, 1.0));
    }
    for row in &mut rows {
        row.sort_unstable_by_key(|&(i, _)| i);
        row.dedup_by_key(|&mut (i, _)| i);
    }
    let train = SparseInteractionMatrix::from_rows(rows, num_users, num_items)?;

    let mut test: Vec<Option<TestEntry>> = vec![None; num_users];
    let mut expected_negs: Option<usize> = None;
    for (u, i, rating, timestamp) in tests {
        let negs = negatives.get(&(u, i)).ok_or_else(|| {
            Error::Consistency(format!(
                "no negatives line keyed ({u},{i}) to match the test rating"
            ))
        })?;
        match expected_negs {
            None => expected_negs = Some(negs.len()),
            Some(n) if n != negs.len() => {
                return Err(Error::Consistency(format!(
                    "user {u} has {} negatives, other users have {n}",
                    negs.len()
                )));
            }
            _ => {}
        }
        if test[u as usize].is_some() {
            return Err(Error::Consistency(format!("duplicate test line for user {u}")));
        }
        test[u as usize] = Some(TestEntry {
            item: i,
            rating,
            timestamp,
            negatives: negs.clone(),
        });
    }
    if test.iter().all(|t| t.is_none()) {
        return Err(Error::EmptyDataset(test_path.display().to_string()));
    }

    let pack = EvaluationPack {
        train: Arc::new(train),
        test,
        candidate_count: expected_negs.unwrap_or(0) + 1,
    };
    pack.validate()?;
    Ok(pack)
}

fn read_train(path: &Path) -> Result<RawTrain> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut events = Vec::new();
    let (mut max_user, mut max_item) = (0u32, 0u32);
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(display.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (u, i, r, t) = parse_rating_line(&line, &display, line_no + 1)?;
        max_user = max_user.max(u);
        max_item = max_item.max(i);
        events.push((u, i, r, t));
    }
    if events.is_empty() {
        return Err(Error::EmptyDataset(display));
    }
    Ok(RawTrain {
        events,
        max_user,
        max_item,
    })
}

fn read_test(path: &Path) -> Result<Vec<(u32, u32, f64, i64)>> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut entries = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(display.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(parse_rating_line(&line, &display, line_no + 1)?);
    }
    Ok(entries)
}

fn read_negatives(path: &Path) -> Result<HashMap<(u32, u32), Vec<u32>>> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut map = HashMap::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(display.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = line_no + 1;
        let err = |message: String| Error::Parse {
            path: display.clone(),
            line: line_no,
            message,
        };
        let mut fields = line.split('\t');
        let key = fields.next().ok_or_else(|| err("empty line".into()))?;
        let key = key
            .strip_prefix('(')
            .and_then(|k| k.strip_suffix(')'))
            .ok_or_else(|| err(format!("expected (user,item) token, got {key:?}")))?;
        let (u, i) = key
            .split_once(',')
            .ok_or_else(|| err(format!("expected (user,item) token, got ({key})")))?;
        let u: u32 = u
            .trim()
            .parse()
            .map_err(|_| err(format!("bad user id {u:?}")))?;
        let i: u32 = i
            .trim()
            .parse()
            .map_err(|_| err(format!("bad item id {i:?}")))?;
        let mut negs = Vec::new();
        for field in fields {
            let n: u32 = field
                .trim()
                .parse()
                .map_err(|_| err(format!("bad negative id {field:?}")))?;
            negs.push(n);
        }
        map.insert((u, i), negs);
    }
    Ok(map)
}

fn parse_rating_line(line: &str, path: &str, line_no: usize) -> Result<(u32, u32, f64, i64)> {
    let err = |message: String| Error::Parse {
        path: path.to_string(),
        line: line_no,
        message,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 4 {
        return Err(err(format!("expected 4 fields, got {}", fields.len())));
    }
    let u: u32 = fields[0]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad user id {:?}", fields[0])))?;
    let i: u32 = fields[1]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad item id {:?}", fields[1])))?;
    let r: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad rating {:?}", fields[2])))?;
    let t: i64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad timestamp {:?}", fields[3])))?;
    Ok((u, i, r, t))
}

/// Writes an [`EvaluationPack`] as an NCF-style split triple. Train events
/// carry rating 1 and timestamp 0 (the pack does not retain per-event
/// timestamps); reloading the result yields identical structures.
pub fn write_ncf_split(pack: &EvaluationPack, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let train_path = dir.join(format!("{name}.train.rating"));
    let mut w = writer(&train_path)?;
    for user in 0..pack.train.num_users() as u32 {
        for &item in pack.train.row(user) {
            writeln!(w, "{user}\t{item}\t1\t0")
                .map_err(|e| Error::io(train_path.display().to_string(), e))?;
        }
    }
    w.flush()
        .map_err(|e| Error::io(train_path.display().to_string(), e))?;

    let test_path = dir.join(format!("{name}.test.rating"));
    let neg_path = dir.join(format!("{name}.test.negative"));
    let mut tw = writer(&test_path)?;
    let mut nw = writer(&neg_path)?;
    for (u, entry) in pack.test.iter().enumerate() {
        let Some(entry) = entry else { continue };
        writeln!(
            tw,
            "{u}\t{}\t{}\t{}",
            entry.item, entry.rating, entry.timestamp
        )
        .map_err(|e| Error::io(test_path.display().to_string(), e))?;
        let negs: Vec<String> = entry.negatives.iter().map(|n| n.to_string()).collect();
        writeln!(nw, "({u},{})\t{}", entry.item, negs.join("\t"))
            .map_err(|e| Error::io(neg_path.display().to_string(), e))?;
    }
    tw.flush()
        .map_err(|e| Error::io(test_path.display().to_string(), e))?;
    nw.flush()
        .map_err(|e| Error::io(neg_path.display().to_string(), e))?;
    Ok(())
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, train: &str, test: &str, neg: &str) {
        std::fs::write(dir.join(format!("{name}.train.rating")), train).unwrap();
        std::fs::write(dir.join(format!("{name}.test.rating")), test).unwrap();
        std::fs::write(dir.join(format!("{name}.test.negative")), neg).unwrap();
    }

    #[test]
    fn toy_split_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "toy",
            "0\t0\t5\t100\n0\t1\t4\t101\n0\t2\t3\t102\n",
            "0\t3\t5\t103\n",
            "(0,3)\t4\t5\n",
        );
        let pack = load_ncf_split(dir.path(), "toy").unwrap();
        assert_eq!(pack.train.num_users(), 1);
        assert_eq!(pack.train.num_items(), 6);
        assert_eq!(pack.candidate_count, 3);
        let entry = pack.test[0].as_ref().unwrap();
        assert_eq!(entry.item, 3);
        assert_eq!(entry.negatives, vec![4, 5]);
    }

    #[test]
    fn mismatched_key_is_a_consistency_error() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "toy",
            "0\t0\t5\t100\n",
            "0\t3\t5\t103\n",
            "(0,2)\t4\t5\n",
        );
        let err = load_ncf_split(dir.path(), "toy").unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn positive_in_train_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "toy",
            "0\t0\t5\t100\n0\t3\t5\t99\n",
            "0\t3\t5\t103\n",
            "(0,3)\t4\t5\n",
        );
        let err = load_ncf_split(dir.path(), "toy").unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn nonuniform_negative_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "toy",
            "0\t0\t5\t100\n1\t0\t5\t100\n",
            "0\t3\t5\t103\n1\t2\t5\t104\n",
            "(0,3)\t4\t5\n(1,2)\t4\n",
        );
        let err = load_ncf_split(dir.path(), "toy").unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_ncf_split(dir.path(), "toy").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn round_trip_preserves_structures() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "toy",
            "0\t0\t5\t100\n0\t1\t4\t101\n1\t2\t3\t50\n1\t0\t3\t51\n",
            "0\t3\t1\t103\n1\t4\t1\t60\n",
            "(0,3)\t4\t2\n(1,4)\t3\t1\n",
        );
        let pack = load_ncf_split(dir.path(), "toy").unwrap();
        let out = tempfile::tempdir().unwrap();
        write_ncf_split(&pack, out.path(), "roundtrip").unwrap();
        let reloaded = load_ncf_split(out.path(), "roundtrip").unwrap();
        assert_eq!(pack.train, reloaded.train);
        assert_eq!(pack.candidate_count, reloaded.candidate_count);
        for (a, b) in pack.test.iter().zip(reloaded.test.iter()) {
            match (a, b) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert_eq!(a.item, b.item);
                    assert_eq!(a.negatives, b.negatives);
                }
                _ => panic!("test entry presence differs"),
            }
        }
    }
}
