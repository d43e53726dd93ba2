//! Fixed-schema CSV files: one row per `(trial, algorithm, iteration)` for
//! the records, one row per CDF step for the cavity distributions.

use serde::{Deserialize, Serialize};

use super::{CdfEntry, RunRecord};
use crate::error::{Error, Result};
use crate::solvers::Algorithm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub n_rows: usize,
    pub seed: u64,
    pub iteration: usize,
    pub mse_db: f64,
    /// Final cavity precisions of the run, repeated on each of its rows.
    pub v_x: f64,
    pub v_z: f64,
    pub converged: bool,
}

/// Flattens records into rows. A run without any recorded MSE contributes
/// no rows.
pub fn record_rows(records: &[RunRecord]) -> Vec<RecordRow> {
    records
        .iter()
        .flat_map(|r| {
            r.mse_trajectory.iter().map(move |&(iteration, mse_db)| RecordRow {
                trial: r.trial,
                algorithm: r.algorithm,
                alpha: r.alpha,
                n_rows: r.n_rows,
                seed: r.seed,
                iteration,
                mse_db,
                v_x: r.final_report.v_x,
                v_z: r.final_report.v_z,
                converged: r.final_report.converged,
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn format_records_csv(rows: &[RecordRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "trial", "algorithm", "alpha", "n_rows", "seed", "iteration", "mse_db", "v_x", "v_z", "converged",
        ])
        .map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    finish(w)
}

pub fn parse_records_csv(text: &str) -> Result<Vec<RecordRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                path: "records.csv".into(),
                line: i + 2,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CdfRow {
    alpha: f64,
    block: &'static str,
    value: f64,
    cdf: f64,
    saep_value: Option<f64>,
}

pub fn format_cdf_csv(entries: &[CdfEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in entries {
        for &(value, cdf) in &e.cdf.points {
            w.serialize(CdfRow {
                alpha: e.alpha,
                block: e.cdf.block.as_str(),
                value,
                cdf,
                saep_value: e.cdf.saep_value,
            })
            .map_err(csv_err)?;
        }
    }
    finish(w)
}
