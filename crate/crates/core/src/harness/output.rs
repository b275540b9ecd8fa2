//! `summary.csv` (one row per experiment) and `report.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::Result;
use crate::harness::experiments::ExperimentOutcome;

pub const SUMMARY_HEADER: &str = "experiment,kind,mesh,n_paths,mean,stderr,ci_low,ci_high,min,max,tolerance,pass";

pub fn summary_csv(outcomes: &[ExperimentOutcome]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for o in outcomes {
        let s = &o.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            o.id,
            o.kind.name(),
            o.mesh,
            o.n_paths,
            s.mean,
            s.stderr,
            s.ci95.0,
            s.ci95.1,
            s.min,
            s.max,
            o.tolerance,
            o.pass()
        );
    }
    out
}

pub fn report_json(outcomes: &[ExperimentOutcome]) -> Result<String> {
    let all: Vec<_> = outcomes
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "kind": o.kind,
                "pass": o.pass(),
                "mesh": o.mesh,
                "n_paths": o.n_paths,
                "tolerance": o.tolerance,
                "summary": o.summary,
                "checks": o.checks,
                "details": o.details,
                "config": o.config,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "experiments": all })).map_err(|e| crate::error::Error::Io(e.to_string()))
}

/// Writes both files into `dir` (created if needed) and returns their paths.
pub fn write_outputs(dir: &Path, outcomes: &[ExperimentOutcome]) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("summary.csv");
    let report = dir.join("report.json");
    std::fs::write(&csv, summary_csv(outcomes))?;
    std::fs::write(&report, report_json(outcomes)?)?;
    Ok((csv, report))
}
