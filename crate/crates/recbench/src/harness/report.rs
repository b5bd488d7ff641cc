//! Deterministic table and bundle emission.
//!
//! TSV tables carry four decimal places (item coverage stays an integer,
//! undefined group metrics print as `undef`); the JSON bundle keeps full
//! precision and is sufficient to re-emit every TSV byte-identically.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::runner::ReportBundle;
use crate::{Error, Result};

/// Writes the requested formats into `dir` under stable names
/// `<dataset>_<table>.<ext>`; returns the paths written.
pub fn emit_reports(bundle: &ReportBundle, dir: &Path, formats: &[String]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written = Vec::new();
    let ds = &bundle.dataset;
    if formats.iter().any(|f| f == "tsv") {
        written.push(write_text(
            dir.join(format!("{ds}_accuracy.tsv")),
            &accuracy_table(bundle),
        )?);
        written.push(write_text(
            dir.join(format!("{ds}_beyond_accuracy.tsv")),
            &beyond_accuracy_table(bundle),
        )?);
        written.push(write_text(
            dir.join(format!("{ds}_bias.tsv")),
            &bias_table(bundle),
        )?);
        for (model, metrics) in &bundle.per_user {
            written.push(write_text(
                dir.join(format!("{ds}_{model}_per_user.tsv")),
                &per_user_table(bundle, metrics),
            )?);
        }
        for record in &bundle.significance {
            let (matrix, mask) = significance_tables(record);
            written.push(write_text(
                dir.join(format!("{ds}_significance_{}.tsv", record.metric)),
                &matrix,
            )?);
            written.push(write_text(
                dir.join(format!("{ds}_significance_{}_mask.tsv", record.metric)),
                &mask,
            )?);
        }
        for (model, trace) in &bundle.traces {
            written.push(write_text(
                dir.join(format!("{ds}_{model}_trace.tsv")),
                &trace_table(trace),
            )?);
        }
    }
    if formats.iter().any(|f| f == "json") {
        let path = dir.join(format!("{ds}_bundle.json"));
        let json = serde_json::to_string_pretty(bundle)
            .map_err(|e| Error::Config(format!("bundle serialization: {e}")))?;
        written.push(write_text(path, &json)?);
    }
    // The manifest always ships, it is the reproducibility record.
    let manifest_path = dir.join(format!("{ds}_manifest.json"));
    let manifest = serde_json::to_string_pretty(&bundle.manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    written.push(write_text(manifest_path, &manifest)?);
    Ok(written)
}

/// Reads a bundle back from its structured export.
pub fn load_bundle(path: &Path) -> Result<ReportBundle> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Container(format!("{}: bad bundle: {e}", path.display())))
}

fn write_text(path: PathBuf, content: &str) -> Result<PathBuf> {
    std::fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_else(|| "undef".into())
}

const ACCURACY_COLUMNS: [&str; 7] = ["hr", "ndcg", "mrr", "map", "mar", "f1", "lauc"];

fn accuracy_table(bundle: &ReportBundle) -> String {
    let mut out = String::from("model");
    for c in ACCURACY_COLUMNS {
        let _ = write!(out, "\t{c}");
    }
    out.push('\n');
    for (model, agg) in &bundle.aggregates {
        let _ = write!(out, "{model}");
        for c in ACCURACY_COLUMNS {
            let _ = write!(out, "\t{}", fmt4(agg.accuracy[c]));
        }
        out.push('\n');
    }
    out
}

fn beyond_accuracy_table(bundle: &ReportBundle) -> String {
    let mut out = String::from("model\tepc\tefd\tic\tgini\tse\n");
    for (model, agg) in &bundle.aggregates {
        let _ = writeln!(
            out,
            "{model}\t{}\t{}\t{}\t{}\t{}",
            fmt4(agg.epc),
            fmt4(agg.efd),
            agg.item_coverage,
            fmt4(agg.gini),
            fmt4(agg.entropy_bits),
        );
    }
    out
}

fn bias_table(bundle: &ReportBundle) -> String {
    let mut out = String::from("model\taclt\taplt\tarp\tpop_rsp\tpop_reo\n");
    for (model, agg) in &bundle.aggregates {
        let _ = writeln!(
            out,
            "{model}\t{}\t{}\t{}\t{}\t{}",
            fmt4(agg.aclt),
            fmt4(agg.aplt),
            fmt4(agg.arp),
            fmt_opt(agg.pop_rsp),
            fmt_opt(agg.pop_reo),
        );
    }
    out
}

fn per_user_table(
    bundle: &ReportBundle,
    metrics: &std::collections::BTreeMap<String, Vec<f64>>,
) -> String {
    let mut out = String::from("user\tmetric\tvalue\n");
    for (metric, values) in metrics {
        for (user, value) in bundle.users.iter().zip(values) {
            let _ = writeln!(out, "{user}\t{metric}\t{value}");
        }
    }
    out
}

fn significance_tables(record: &super::runner::SignificanceRecord) -> (String, String) {
    let n = record.algorithms.len();
    let mut matrix = String::from("algorithm");
    let mut mask = String::from("algorithm");
    for name in &record.algorithms {
        let _ = write!(matrix, "\t{name}");
        let _ = write!(mask, "\t{name}");
    }
    matrix.push('\n');
    mask.push('\n');
    for i in 0..n {
        let _ = write!(matrix, "{}", record.algorithms[i]);
        let _ = write!(mask, "{}", record.algorithms[i]);
        for j in 0..n {
            match record.p_values[i * n + j] {
                Some(p) => {
                    let _ = write!(matrix, "\t{p:.6}");
                }
                None => {
                    let _ = write!(matrix, "\t-");
                }
            }
            let bit = if record.significant[i * n + j] { 1 } else { 0 };
            let _ = write!(mask, "\t{bit}");
        }
        matrix.push('\n');
        mask.push('\n');
    }
    (matrix, mask)
}

fn trace_table(trace: &crate::models::TrainTrace) -> String {
    let mut out = String::from("epoch\tmean_loss\thr\tndcg\n");
    for e in &trace.epochs {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", e.epoch, e.mean_loss, e.hr, e.ndcg);
    }
    let _ = writeln!(out, "# best_epoch\t{}\tbest_hr\t{}", trace.best_epoch, trace.best_hr);
    out
}
