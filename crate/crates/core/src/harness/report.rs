//! Report files: `report.json` with the full structure and `tradeoff.csv`
//! with one row per run and metric pair.

use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::ExperimentReport;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const TRADEOFF_FILE: &str = "tradeoff.csv";

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions, so equal reports serialize to equal bytes.
pub fn report_json(r: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r)?;
    s.push('\n');
    Ok(s)
}

pub fn tradeoff_csv(r: &ExperimentReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run_index", "fairness_metric", "performance_metric", "fairness", "performance", "region"])?;
    for run in &r.per_run {
        for t in &run.tradeoff {
            w.write_record([
                run.run_index.to_string(),
                t.fairness_metric.to_string(),
                t.performance_metric.to_string(),
                t.fairness.to_string(),
                t.performance.to_string(),
                t.region.name().to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

/// Writes both report files into `dir`, creating it if needed. Returns the
/// paths written.
pub fn emit_report(r: &ExperimentReport, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join(REPORT_FILE);
    fs::write(&json, report_json(r)?).map_err(|e| Error::io(&json, e))?;
    let csv = dir.join(TRADEOFF_FILE);
    fs::write(&csv, tradeoff_csv(r)?).map_err(|e| Error::io(&csv, e))?;
    Ok((json, csv))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
