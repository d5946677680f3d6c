//! Result and dataset persistence. Signals travel as single-column CSVs,
//! benchmark rows as a fixed-schema CSV, reports as JSON. Floats are
//! written with the shortest representation that parses back to the same
//! bits, so every file round-trips exactly; line endings are LF on all
//! platforms. A failed run shows up as NaN fit values with
//! `converged = false`, never as a missing row.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::BasisSection;
use crate::em::EmTrace;
use crate::error::{Error, Result};
use crate::harness::RunResult;
use crate::linalg::Vector;
use crate::metrics::Summary;

/// Writes one named column of floats.
pub fn write_vector_csv(path: &Path, header: &str, values: &Vector) -> Result<()> {
    let mut text = String::with_capacity(values.len() * 20 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for v in values.iter() {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a single-column CSV written by [`write_vector_csv`], checking the
/// header name.
pub fn read_vector_csv(path: &Path, header: &str) -> Result<Vector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    match lines.next() {
        Some(first) if first == header => {}
        Some(first) => {
            return Err(Error::Parse(format!(
                "{}: expected header \"{header}\", found \"{first}\"",
                path.display()
            )))
        }
        None => {
            return Err(Error::Parse(format!("{}: file is empty", path.display())));
        }
    }
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Parse(format!(
                "{}: row {}: not a number: \"{line}\"",
                path.display(),
                row + 2
            ))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data rows under header \"{header}\"",
            path.display()
        )));
    }
    Ok(Vector::from_vec(values))
}

/// Writes the benchmark results table. Column order is part of the file
/// contract: `p,run,seed,fit_bkb,fit_nbls,fit_nbkb,iters,converged,wall_ms`.
pub fn write_results_csv(path: &Path, rows: &[RunResult]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Parse(format!("serializing results row: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Parse(format!("flushing results table: {e}")))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<RunResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize().enumerate() {
        let row: RunResult =
            record.map_err(|e| Error::Parse(format!("{}: row {}: {e}", path.display(), i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Per-iteration EM history: iteration index, log marginal likelihood, and
/// the scalar hyperparameters. The input coordinates are omitted; they live
/// in `theta.json`.
pub fn write_trace_csv(path: &Path, trace: &EmTrace) -> Result<()> {
    let mut text = String::from("iter,log_marginal,sigma2,beta\n");
    for (i, (theta, lml)) in trace.thetas.iter().zip(&trace.log_marginals).enumerate() {
        text.push_str(&format!("{i},{lml},{},{}\n", theta.sigma2, theta.beta));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Estimated hyperparameters and run diagnostics, the `theta.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub x: Vec<f64>,
    pub sigma2: f64,
    pub beta: f64,
    pub log_marginal: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Provenance of a simulated dataset, the `instance.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceReport {
    pub seed: u64,
    pub sigma2_true: f64,
    pub basis: BasisSection,
}

/// Per-group five-number summaries, one entry per estimator. `None` marks a
/// group where every run of that estimator failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub p: usize,
    pub bkb: Option<Summary>,
    pub nbls: Option<Summary>,
    pub nbkb: Option<Summary>,
}

/// The `summary.json` payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub groups: Vec<GroupSummary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
