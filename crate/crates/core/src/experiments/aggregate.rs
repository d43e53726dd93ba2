//! Trial aggregation: per-iteration MSE statistics and pooled cavity CDFs.

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::solvers::Algorithm;

/// Two-sided 95% quantile of the standard normal.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    X,
    Z,
}

impl Block {
    pub fn as_str(&self) -> &'static str {
        match self {
            Block::X => "x",
            Block::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub iteration: usize,
    pub mean_mse_db: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseAggregate {
    pub algorithm: Algorithm,
    pub points: Vec<AggregatePoint>,
    pub included: usize,
    /// Diverged runs and runs without any recorded MSE.
    pub excluded: usize,
    pub warnings: Vec<String>,
}

impl MseAggregate {
    pub fn final_mean(&self) -> Option<f64> {
        self.points.last().map(|p| p.mean_mse_db)
    }
}

/// Per-iteration mean and 95% half-width of `mse_db` over the runs of one
/// algorithm. Runs that stopped early (converged or out of iterations) hold
/// their last value for the remaining iterations.
pub fn aggregate_mse(records: &[RunRecord], algorithm: Algorithm) -> MseAggregate {
    let runs: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
    let (kept, dropped): (Vec<&RunRecord>, Vec<&RunRecord>) = runs
        .iter()
        .partition(|r| !r.final_report.diverged && !r.mse_trajectory.is_empty());
    let mut warnings = Vec::new();
    if !dropped.is_empty() {
        warnings.push(format!("{algorithm}: {} of {} runs excluded", dropped.len(), runs.len()));
    }
    if kept.is_empty() {
        if !runs.is_empty() {
            warnings.push(format!("{algorithm}: every run diverged; aggregate is empty"));
        }
        return MseAggregate {
            algorithm,
            points: Vec::new(),
            included: 0,
            excluded: dropped.len(),
            warnings,
        };
    }
    if kept.len() < 2 {
        warnings.push(format!("{algorithm}: a single run gives no confidence interval"));
    }
    let iterations = kept
        .iter()
        .flat_map(|r| r.mse_trajectory.iter().map(|p| p.0))
        .max()
        .unwrap_or(0);
    let first = kept
        .iter()
        .filter_map(|r| r.mse_trajectory.first().map(|p| p.0))
        .min()
        .unwrap_or(0);
    let n = kept.len() as f64;
    let mut points = Vec::with_capacity(iterations + 1 - first);
    for it in first..=iterations {
        let values: Vec<f64> = kept
            .iter()
            .filter_map(|r| {
                r.mse_trajectory
                    .iter()
                    .take_while(|p| p.0 <= it)
                    .last()
                    .map(|p| p.1)
            })
            .collect();
        if values.len() < kept.len() {
            continue;
        }
        let mean = values.iter().sum::<f64>() / n;
        let ci_db = if kept.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            Z95 * (var / n).sqrt()
        } else {
            0.0
        };
        points.push(AggregatePoint {
            iteration: it,
            mean_mse_db: mean,
            ci_db,
        });
    }
    MseAggregate {
        algorithm,
        points,
        included: kept.len(),
        excluded: dropped.len(),
        warnings,
    }
}

/// Pooled empirical CDF of EP's per-coordinate cavity precisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityCdf {
    pub block: Block,
    /// `(value, F(value))` at each distinct sample value, increasing.
    pub points: Vec<(f64, f64)>,
    pub samples: usize,
    /// Mean SAEP scalar (`v_x` or `v_z`) over the SAEP records, if any.
    pub saep_value: Option<f64>,
}

impl CavityCdf {
    /// Smallest sample value whose CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.points
            .iter()
            .find(|(_, f)| *f >= p)
            .or(self.points.last())
            .map_or(f64::NAN, |pt| pt.0)
    }

    pub fn interquartile_width(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

pub fn cavity_cdf(records: &[RunRecord], block: Block) -> Result<CavityCdf> {
    let mut samples: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == Algorithm::Ep && !r.final_report.diverged)
        .flat_map(|r| match block {
            Block::X => r.final_report.cavity_x.iter().copied(),
            Block::Z => r.final_report.cavity_z.iter().copied(),
        })
        .filter(|v| v.is_finite())
        .collect();
    if samples.is_empty() {
        return Err(Error::invalid("no EP cavity samples to build a CDF from"));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in samples.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = f,
            _ => points.push((*v, f)),
        }
    }
    let saep: Vec<f64> = records
        .iter()
        .filter(|r| r.algorithm == Algorithm::Saep && !r.final_report.diverged)
        .map(|r| match block {
            Block::X => r.final_report.v_x,
            Block::Z => r.final_report.v_z,
        })
        .collect();
    let saep_value = (!saep.is_empty()).then(|| saep.iter().sum::<f64>() / saep.len() as f64);
    Ok(CavityCdf {
        block,
        points,
        samples: samples.len(),
        saep_value,
    })
}
