//! CSV and JSON output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use caseparam_core::selection::CVReport;
use serde::Serialize;

use crate::simulate::StudyReport;

fn io_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Shortest round-trip representation, so reruns compare byte for byte.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes a table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}

/// `<stem>_seed<seed>.csv` with one row per replicate, setting and method,
/// and `<stem>_seed<seed>_summary.json`. Returns both paths.
pub fn write_study(dir: &Path, stem: &str, report: &StudyReport) -> io::Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}_seed{}.csv", report.seed));
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.replicate.to_string(),
                r.setting.clone(),
                r.method.clone(),
                serde_json::to_value(r.metric).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                num(r.value),
            ]
        })
        .collect();
    write_table(&csv_path, &["replicate", "setting", "method", "metric", "value"], &rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        study: &'a str,
        scenario: &'a str,
        seed: u64,
        replicates: usize,
        excluded: &'a std::collections::BTreeMap<String, usize>,
        cells: Vec<crate::simulate::SummaryRow>,
    }
    let json_path = dir.join(format!("{stem}_seed{}_summary.json", report.seed));
    write_json(
        &json_path,
        &Summary {
            study: &report.study,
            scenario: &report.scenario,
            seed: report.seed,
            replicates: report.replicates,
            excluded: &report.excluded,
            cells: report.summary(),
        },
    )?;
    Ok((csv_path, json_path))
}

/// Flat `(repeat, fold, score)` rows of a CV report.
pub fn cv_rows(report: &CVReport) -> Vec<Vec<String>> {
    report
        .fold_scores
        .iter()
        .enumerate()
        .flat_map(|(r, folds)| folds.iter().enumerate().map(move |(k, s)| vec![r.to_string(), k.to_string(), num(*s)]))
        .collect()
}
