//! Report assembly and emission: one deterministic JSON document plus one
//! CSV per sampled curve, written atomically (write-then-rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checks::{CheckResult, CurveData};

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub domain: String,
    pub dimension: usize,
    pub points_per_axis: usize,
    pub h: f64,
    pub k: f64,
    pub k_was_auto: bool,
    pub m: String,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub points_per_axis: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub target: String,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted order, `"exact"`, or `"no convergence"`.
    pub observed_order: String,
}

/// The machine-readable run report. Wall time is deliberately absent: the
/// report must be byte-identical for identical config + seed; timing goes
/// to stderr.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub scenario: ScenarioSummary,
    pub checks: Vec<CheckResult>,
    pub curves: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub convergence: Vec<ConvergenceTable>,
    pub pass: bool,
}

impl RunReport {
    pub fn aggregate_pass(checks: &[CheckResult]) -> bool {
        checks.iter().all(|c| c.pass)
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn csv_text(curve: &CurveData) -> String {
    let mut out = curve.columns.join(",");
    out.push('\n');
    for row in &curve.rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            // shortest round-trip float formatting: deterministic
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Writes the report JSON and curve CSVs into `out_dir`, returning the
/// list of files written.
pub fn emit(
    out_dir: &Path,
    report: &RunReport,
    curves: &[CurveData],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for curve in curves {
        let path = out_dir.join(format!("curve_{}.csv", curve.name));
        atomic_write(&path, csv_text(curve).as_bytes())?;
        written.push(path);
    }
    let json = serde_json::to_string_pretty(report).expect("report serialization");
    let path = out_dir.join("report.json");
    atomic_write(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}
