//! Command-line driver. Exit codes: 0 success, 1 configuration or usage
//! error, 2 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use saep::ensembles::{generate, read_matrix, singular_values, write_profile};
use saep::experiments::{
    identity_suite, instance_from_seed, instance_profile, run_trial, sweep, trial_seed, write_outputs,
    ExperimentConfig,
};
use saep::stability::stability_report;
use saep::{atomic_write, Error};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "saep", about = "EP, AMP and self-averaging EP experiments for one-bit compressed sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration (a single alpha) and write records.
    Run(Common),
    /// Run every (alpha, algorithm) pair of the configuration.
    Sweep(Common),
    /// Write the singular values of a matrix (generated or read from --matrix).
    Spectra(Common),
    /// Solve one instance per algorithm and write the AT-line diagnostics.
    Stability(Common),
    /// Run the transform identity suite and the log-determinant validator.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<String>,
    #[arg(long, value_name = "N")]
    trials: Option<String>,
    /// ep, amp or saep; a comma-separated list selects several.
    #[arg(long, value_name = "ALG")]
    algorithm: Option<String>,
    /// iid, dct or file.
    #[arg(long, value_name = "KIND")]
    ensemble: Option<String>,
    /// Ratio N/K; fractions such as 1/3 and comma-separated lists are accepted.
    #[arg(long, value_name = "F")]
    alpha: Option<String>,
    #[arg(long = "K", value_name = "N")]
    k: Option<String>,
    #[arg(long, value_name = "N")]
    max_iters: Option<String>,
    #[arg(long, value_name = "F")]
    tol: Option<String>,
    #[arg(long, value_name = "F")]
    damping: Option<String>,
    /// Matrix file for --ensemble file and for spectra.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_name = "U64", default_value_t = 0)]
    seed: u64,
    /// Number of random duality draws.
    #[arg(long, value_name = "N", default_value_t = 100)]
    draws: usize,
    /// Signal dimensions for the log-determinant validator.
    #[arg(long = "K", value_name = "N", value_delimiter = ',', default_values_t = [200usize, 400])]
    k: Vec<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> saep::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("algorithms", &self.algorithm),
            ("ensemble", &self.ensemble),
            ("alpha", &self.alpha),
            ("K", &self.k),
            ("max_iters", &self.max_iters),
            ("tol", &self.tol),
            ("damping", &self.damping),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)
                    .map_err(|e| Error::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        if let Some(m) = &self.matrix {
            cfg.matrix = Some(m.clone());
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn run_or_sweep(common: &Common, single: bool) -> saep::Result<()> {
    let cfg = common.config()?;
    if single && cfg.alpha_list.len() != 1 {
        return Err(Error::Config(format!(
            "run takes a single alpha, got {}; use sweep",
            cfg.alpha_list.len()
        )));
    }
    let outcome = sweep(&cfg)?;
    write_outputs(&outcome, &cfg.output_dir)?;
    for a in &outcome.aggregates {
        let last = a.aggregate.points.last();
        println!(
            "alpha={:.4} N={} {}: final mse {} dB (+/- {}), {} included, {} excluded",
            a.alpha,
            a.n_rows,
            a.aggregate.algorithm,
            last.map_or("n/a".into(), |p| format!("{:.3}", p.mean_mse_db)),
            last.map_or("n/a".into(), |p| format!("{:.3}", p.ci_db)),
            a.aggregate.included,
            a.aggregate.excluded
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn spectra(common: &Common) -> saep::Result<()> {
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let h = match &common.matrix {
        Some(path) => read_matrix::<f64>(path)?,
        None => {
            let cfg = common.config()?;
            let alpha = cfg.alpha_list[0];
            let seed = trial_seed(cfg.base_seed, 0);
            generate(&cfg.ensemble_for(alpha, seed))?
        }
    };
    let profile = singular_values(&h)?;
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("spectrum.txt");
    write_profile(&path, &profile)?;
    println!("wrote {} ({}x{})", path.display(), h.nrows(), h.ncols());
    Ok(())
}

fn stability(common: &Common) -> saep::Result<()> {
    let cfg = common.config()?;
    let alpha = cfg.alpha_list[0];
    let records = run_trial(&cfg, alpha, 0)?;
    let inst = instance_from_seed(&cfg, alpha, records[0].seed)?;
    let profile = instance_profile(&cfg, alpha, inst.seed, &inst.h)?;
    let mut entries = Vec::new();
    let mut any = false;
    for r in &records {
        let entry = match stability_report(&r.final_report, &profile) {
            Ok(s) => {
                any = true;
                println!(
                    "{}: converged={} margin_x={:.6} margin_z={:.6} stable={}",
                    r.algorithm, r.final_report.converged, s.margin_x, s.margin_z, s.stable
                );
                json!({ "algorithm": r.algorithm, "converged": r.final_report.converged, "report": s })
            }
            Err(e) => {
                println!("{}: unavailable ({e})", r.algorithm);
                json!({ "algorithm": r.algorithm, "converged": r.final_report.converged, "error": e.to_string() })
            }
        };
        entries.push(entry);
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let doc = json!({ "alpha": alpha, "K": cfg.k, "seed": records[0].seed, "runs": entries });
    atomic_write(
        &cfg.output_dir.join("stability.json"),
        serde_json::to_string_pretty(&doc)?.as_bytes(),
    )?;
    if any {
        Ok(())
    } else {
        Err(Error::DiagnosticUnavailable("no fixed point admitted a stability report".into()))
    }
}

fn validate(args: &ValidateArgs) -> saep::Result<()> {
    let report = identity_suite(args.seed, args.draws, &args.k);
    for e in &report.entries {
        println!(
            "{} {}: {:.3e} (threshold {:.0e})",
            if e.passed { "PASS" } else { "FAIL" },
            e.name,
            e.residual,
            e.threshold
        );
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        atomic_write(&dir.join("validate.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed = report.entries.iter().filter(|e| !e.passed).count();
        Err(Error::NumericalFailure {
            context: "validate".into(),
            detail: format!("{failed} checks failed"),
        })
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(c) => run_or_sweep(c, true),
        Command::Sweep(c) => run_or_sweep(c, false),
        Command::Spectra(c) => spectra(c),
        Command::Stability(c) => stability(c),
        Command::Validate(v) => validate(v),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
