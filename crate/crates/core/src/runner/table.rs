//! CSV schemas for experiment results and the theorem table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theorem::StuckProbability;

pub const RESULT_HEADER: [&str; 8] = [
    "trial",
    "algorithm",
    "demos",
    "norm_perf",
    "loss_dim1",
    "loss_dim2",
    "baseline_shifted",
    "error",
];

pub const THEOREM_HEADER: [&str; 7] = ["m", "mu", "exact", "mc", "stderr", "bound", "bound_valid"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    HC,
    RC,
}

/// One (trial, algorithm, budget) outcome. Empty optional cells mean the
/// value was unavailable, e.g. no held-out split at tiny budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub demos: usize,
    pub norm_perf: Option<f64>,
    pub loss_dim1: Option<f64>,
    pub loss_dim2: Option<f64>,
    pub baseline_shifted: bool,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(trial: usize, algorithm: Algorithm, demos: usize, error: &Error) -> Self {
        Self {
            trial,
            algorithm,
            demos,
            norm_perf: None,
            loss_dim1: None,
            loss_dim2: None,
            baseline_shifted: false,
            error: Some(error.to_string()),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Csv {
        line,
        message: e.to_string(),
    }
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(RESULT_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a results CSV, checking the header exactly.
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(RESULT_HEADER) {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header {}", RESULT_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize::<ResultRow>() {
        rows.push(rec.map_err(csv_err)?);
    }
    Ok(rows)
}

pub fn write_theorem_table<W: Write>(out: W, rows: &[StuckProbability]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(THEOREM_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.mu.to_string(),
            r.exact.to_string(),
            r.mc_estimate.to_string(),
            r.mc_stderr.to_string(),
            r.gaussian_bound.to_string(),
            r.bound_valid.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
