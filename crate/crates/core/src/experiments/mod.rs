//! Experiment orchestration: instance generation, multi-trial sweeps over
//! `α × algorithm`, metric aggregation and file emission.

mod aggregate;
mod config;
mod records;
mod suite;

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{analytic_profile, generate, read_matrix, singular_values, EnsembleKind, SpectralProfile};
use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::solvers::{mse_db, run, Algorithm, FixedPointReport, Problem, SpectralSource};
use crate::stability::{stability_report, StabilityReport};

pub use aggregate::{aggregate_mse, cavity_cdf, AggregatePoint, Block, CavityCdf, MseAggregate};
pub use config::{ensemble_name, parse_ensemble, parse_ratio, ExperimentConfig, LikelihoodKind, ROUNDING_RULE};
pub use records::{format_cdf_csv, format_records_csv, parse_records_csv, record_rows, RecordRow};
pub use suite::{identity_suite, theorem1_gap, IdentitySuiteReport, SuiteEntry};

/// Per-trial seed: the base seed run through ChaCha8 on the trial's stream.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// One problem instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub h: DMatrix<f64>,
    pub x_true: DVector<f64>,
    pub y: DVector<f64>,
    pub seed: u64,
}

/// Draws `H` from the configured ensemble, `x` iid spike-and-slab and
/// `y = sign(Hx)` (with `sign(0) = +1`) or `y = Hx + noise`.
pub fn generate_instance(config: &ExperimentConfig, alpha: f64, trial: usize) -> Result<Instance> {
    instance_from_seed(config, alpha, trial_seed(config.base_seed, trial))
}

/// [`generate_instance`] for an explicit instance seed, as recorded in
/// [`RunRecord::seed`].
pub fn instance_from_seed(config: &ExperimentConfig, alpha: f64, seed: u64) -> Result<Instance> {
    let ensemble = config.ensemble_for(alpha, seed);
    let h: DMatrix<f64> = match ensemble.kind {
        EnsembleKind::FromFile => {
            let path = ensemble.path.as_deref().ok_or_else(|| Error::Config("no matrix path".into()))?;
            let h = read_matrix(path)?;
            if h.shape() != (ensemble.n_rows, ensemble.n_cols) {
                return Err(Error::Config(format!(
                    "{}: matrix is {}x{}, config asks for {}x{}",
                    path.display(),
                    h.nrows(),
                    h.ncols(),
                    ensemble.n_rows,
                    ensemble.n_cols
                )));
            }
            h
        }
        _ => generate(&ensemble)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let slab = Normal::new(0.0, config.tau.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let x_true = DVector::from_fn(config.k, |_, _| {
        if rng.gen::<f64>() < config.rho {
            slab.sample(&mut rng)
        } else {
            0.0
        }
    });
    let z = &h * &x_true;
    let y = match config.likelihood {
        LikelihoodKind::Sign => z.map(|v| if v >= 0.0 { 1.0 } else { -1.0 }),
        LikelihoodKind::Gaussian => {
            let noise = Normal::new(0.0, config.noise_var.unwrap_or(0.0).sqrt())
                .map_err(|e| Error::Config(e.to_string()))?;
            z.map(|v| v + noise.sample(&mut rng))
        }
    };
    Ok(Instance { h, x_true, y, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial: usize,
    pub alpha: f64,
    pub n_rows: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub mse_trajectory: Vec<(usize, f64)>,
    pub final_report: FixedPointReport<f64>,
    /// Per-coordinate `ΛΛ_x` for EP, the scalar `v_x` otherwise.
    pub cavity_cdf_samples: Vec<f64>,
    pub stability: Option<StabilityReport<f64>>,
    pub wall_time_ms: u64,
}

impl RunRecord {
    pub fn final_mse_db(&self) -> Option<f64> {
        self.mse_trajectory.last().map(|p| p.1)
    }
}

/// Profile used by SAEP and by the stability diagnostics for one instance.
pub fn instance_profile(
    config: &ExperimentConfig,
    alpha: f64,
    seed: u64,
    h: &DMatrix<f64>,
) -> Result<SpectralProfile<f64>> {
    match (config.spectral_source, config.ensemble) {
        (SpectralSource::Analytic, EnsembleKind::IidGaussian | EnsembleKind::RowOrthogonalDct) => {
            analytic_profile(&config.ensemble_for(alpha, seed))
        }
        _ => singular_values(h),
    }
}

/// Runs every configured algorithm on one instance.
pub fn run_trial(config: &ExperimentConfig, alpha: f64, trial: usize) -> Result<Vec<RunRecord>> {
    let inst = generate_instance(config, alpha, trial)?;
    run_instance(config, alpha, trial, &inst)
}

pub fn run_instance(
    config: &ExperimentConfig,
    alpha: f64,
    trial: usize,
    inst: &Instance,
) -> Result<Vec<RunRecord>> {
    let n_rows = inst.h.nrows();
    let model = config.model(n_rows)?;
    let profile = instance_profile(config, alpha, inst.seed, &inst.h)?;
    let mut out = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let problem = Problem::new(&model, &inst.h, &inst.y)
            .with_profile(&profile)
            .with_truth(&inst.x_true);
        let start = Instant::now();
        let mut report = run(problem, config.solver(algorithm))?;
        let wall_time_ms = start.elapsed().as_millis() as u64;
        if report.mse_trajectory.is_empty() && report.iterations > 0 {
            // the run broke down before any estimate was recorded
            let m = mse_db(&report.eta_x, &inst.x_true, config.mse_normalization);
            if m.is_finite() {
                report.mse_trajectory.push((report.iterations, m));
            }
        }
        let stability = if report.converged && report.lambda_x.is_finite() {
            match stability_report(&report, &profile) {
                Ok(s) => {
                    report.warnings.extend(s.warnings());
                    Some(s)
                }
                Err(e) => {
                    report.warnings.push(format!("stability: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let cavity_cdf_samples = if algorithm == Algorithm::Ep {
            report.cavity_x.clone()
        } else {
            vec![report.v_x]
        };
        out.push(RunRecord {
            trial,
            alpha,
            n_rows,
            algorithm,
            seed: inst.seed,
            mse_trajectory: report.mse_trajectory.clone(),
            final_report: report,
            cavity_cdf_samples,
            stability,
            wall_time_ms,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub alpha: f64,
    pub n_rows: usize,
    #[serde(flatten)]
    pub aggregate: MseAggregate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CdfEntry {
    pub alpha: f64,
    #[serde(flatten)]
    pub cdf: CavityCdf,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<AggregateEntry>,
    pub cdfs: Vec<CdfEntry>,
    pub warnings: Vec<String>,
}

/// Runs `alpha_list × trials × algorithms`; trials run on the rayon pool and
/// are collected in `(alpha, trial, algorithm)` order.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let jobs: Vec<(f64, usize)> = config
        .alpha_list
        .iter()
        .flat_map(|&a| (0..config.trials).map(move |t| (a, t)))
        .collect();
    let batches: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(a, t)| run_trial(config, a, t))
        .collect::<Result<_>>()?;
    let records: Vec<RunRecord> = batches.into_iter().flatten().collect();

    let mut warnings = config.rounding_notes();
    let mut aggregates = Vec::new();
    let mut cdfs = Vec::new();
    for &alpha in &config.alpha_list {
        let subset: Vec<RunRecord> = records.iter().filter(|r| r.alpha == alpha).cloned().collect();
        for &algorithm in &config.algorithms {
            let aggregate = aggregate_mse(&subset, algorithm);
            warnings.extend(aggregate.warnings.iter().map(|w| format!("alpha = {alpha}: {w}")));
            aggregates.push(AggregateEntry {
                alpha,
                n_rows: config.n_rows(alpha),
                aggregate,
            });
        }
        if config.algorithms.contains(&Algorithm::Ep) {
            for block in [Block::X, Block::Z] {
                if let Ok(cdf) = cavity_cdf(&subset, block) {
                    cdfs.push(CdfEntry { alpha, cdf });
                }
            }
        }
    }
    for r in &records {
        warnings.extend(r.final_report.warnings.iter().map(|w| {
            format!("alpha = {}, trial {}, {}: {w}", r.alpha, r.trial, r.algorithm)
        }));
    }
    Ok(SweepOutcome {
        config: config.clone(),
        records,
        aggregates,
        cdfs,
        warnings,
    })
}

#[derive(Serialize)]
struct RunSummary<'a> {
    trial: usize,
    alpha: f64,
    algorithm: Algorithm,
    seed: u64,
    converged: bool,
    diverged: bool,
    iterations: usize,
    final_mse_db: Option<f64>,
    v_x: f64,
    v_z: f64,
    wall_time_ms: u64,
    stability: Option<&'a StabilityReport<f64>>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    rounding_rule: &'static str,
    n_rows: Vec<(f64, usize)>,
    aggregates: &'a [AggregateEntry],
    runs: Vec<RunSummary<'a>>,
    warnings: &'a [String],
}

pub fn summary_json(outcome: &SweepOutcome) -> Result<String> {
    let c = &outcome.config;
    let summary = Summary {
        config: c,
        rounding_rule: ROUNDING_RULE,
        n_rows: c.alpha_list.iter().map(|a| (*a, c.n_rows(*a))).collect(),
        aggregates: &outcome.aggregates,
        runs: outcome
            .records
            .iter()
            .map(|r| RunSummary {
                trial: r.trial,
                alpha: r.alpha,
                algorithm: r.algorithm,
                seed: r.seed,
                converged: r.final_report.converged,
                diverged: r.final_report.diverged,
                iterations: r.final_report.iterations,
                final_mse_db: r.final_mse_db(),
                v_x: r.final_report.v_x,
                v_z: r.final_report.v_z,
                wall_time_ms: r.wall_time_ms,
                stability: r.stability.as_ref(),
            })
            .collect(),
        warnings: &outcome.warnings,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

/// Writes `records.csv`, `summary.json` and, when EP ran, `cavity_cdf.csv`.
pub fn write_outputs(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let rows = record_rows(&outcome.records);
    atomic_write(&dir.join("records.csv"), format_records_csv(&rows)?.as_bytes())?;
    if !outcome.cdfs.is_empty() {
        atomic_write(&dir.join("cavity_cdf.csv"), format_cdf_csv(&outcome.cdfs)?.as_bytes())?;
    }
    atomic_write(&dir.join("summary.json"), summary_json(outcome)?.as_bytes())
}
