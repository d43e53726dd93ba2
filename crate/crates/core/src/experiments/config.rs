//! Flat `key = value` experiment configuration.
//!
//! Grammar: one assignment per line, `#` starts a comment, lists are
//! comma-separated, ratios may be written as fractions (`1/3`). Unknown keys
//! are errors.
//!
//! | key | value | default |
//! |---|---|---|
//! | `rho`, `tau` | prior slab weight and variance | `0.1`, `1` |
//! | `likelihood` | `sign` or `gaussian` | `sign` |
//! | `noise_var` | variance for `gaussian` | none |
//! | `ensemble` | `iid`, `dct` or `file` | `iid` |
//! | `matrix` | matrix path for `file` | none |
//! | `alpha` | list of ratios N/K | `1/3` |
//! | `K` | signal dimension | `1200` |
//! | `trials` | trials per ratio | `20` |
//! | `algorithms` | subset of `ep, amp, saep` | `ep, saep` |
//! | `max_iters`, `tol`, `damping`, `site_damping` | solver settings | solver defaults |
//! | `spectral_source` | `analytic` or `empirical` | `analytic` |
//! | `mse_normalization` | `per_coordinate` or `signal_energy` | `per_coordinate` |
//! | `seed` | base seed | `0` |
//! | `out` | output directory | `out` |

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleKind, MatrixEnsemble};
use crate::error::{Error, Result};
use crate::scalar_models::{LikelihoodSpec, ModelSpec, PriorSpec};
use crate::solvers::{Algorithm, MseNormalization, SolverConfig, SpectralSource};

/// How `N` is obtained from `α·K`.
pub const ROUNDING_RULE: &str = "N = round(alpha * K), halves rounded away from zero";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodKind {
    Sign,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rho: f64,
    pub tau: f64,
    pub likelihood: LikelihoodKind,
    pub noise_var: Option<f64>,
    pub ensemble: EnsembleKind,
    pub matrix: Option<PathBuf>,
    pub alpha_list: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub max_iters: usize,
    pub tol: f64,
    pub damping: f64,
    pub site_damping: f64,
    pub spectral_source: SpectralSource,
    pub mse_normalization: MseNormalization,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverConfig::<f64>::new(Algorithm::Saep);
        ExperimentConfig {
            rho: 0.1,
            tau: 1.0,
            likelihood: LikelihoodKind::Sign,
            noise_var: None,
            ensemble: EnsembleKind::IidGaussian,
            matrix: None,
            alpha_list: vec![1.0 / 3.0],
            k: 1200,
            trials: 20,
            algorithms: vec![Algorithm::Ep, Algorithm::Saep],
            max_iters: solver.max_iters,
            tol: solver.tol,
            damping: solver.damping,
            site_damping: solver.site_damping,
            spectral_source: solver.spectral_source,
            mse_normalization: solver.mse_normalization,
            base_seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

/// Parses a ratio written as a decimal or as `p/q`.
pub fn parse_ratio(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| Error::Config(format!("bad ratio `{s}`")))?;
            let q: f64 = q.trim().parse().map_err(|_| Error::Config(format!("bad ratio `{s}`")))?;
            p / q
        }
        None => s.parse().map_err(|_| Error::Config(format!("bad number `{s}`")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{s}` is not finite")))
    }
}

pub fn parse_ensemble(s: &str) -> Result<EnsembleKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "iid" => Ok(EnsembleKind::IidGaussian),
        "dct" => Ok(EnsembleKind::RowOrthogonalDct),
        "file" => Ok(EnsembleKind::FromFile),
        other => Err(Error::Config(format!("unknown ensemble `{other}` (iid, dct, file)"))),
    }
}

pub fn ensemble_name(kind: EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::IidGaussian => "iid",
        EnsembleKind::RowOrthogonalDct => "dct",
        EnsembleKind::FromFile => "file",
    }
}

fn parse_list<V>(value: &str, f: impl Fn(&str) -> Result<V>) -> Result<Vec<V>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn parse_num<V: FromStr>(line: usize, key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("invalid value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Parses a configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(ln, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_err(ln, format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(m) => config_err(ln, m),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Assigns one key; shared by the file parser and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num_err = |_| Error::Config(format!("invalid value `{value}` for `{key}`"));
        match key {
            "rho" => self.rho = parse_ratio(value)?,
            "tau" => self.tau = parse_ratio(value)?,
            "likelihood" => {
                self.likelihood = match value.to_ascii_lowercase().as_str() {
                    "sign" => LikelihoodKind::Sign,
                    "gaussian" => LikelihoodKind::Gaussian,
                    other => return Err(Error::Config(format!("unknown likelihood `{other}`"))),
                }
            }
            "noise_var" => self.noise_var = Some(parse_ratio(value)?),
            "ensemble" => self.ensemble = parse_ensemble(value)?,
            "matrix" => self.matrix = Some(PathBuf::from(value)),
            "alpha" => self.alpha_list = parse_list(value, parse_ratio)?,
            "K" | "k" => self.k = parse_num(0, key, value).map_err(num_err)?,
            "trials" => self.trials = parse_num(0, key, value).map_err(num_err)?,
            "algorithms" | "algorithm" => {
                self.algorithms = parse_list(value, |s| s.parse::<Algorithm>())?
            }
            "max_iters" => self.max_iters = parse_num(0, key, value).map_err(num_err)?,
            "tol" => self.tol = parse_num(0, key, value).map_err(num_err)?,
            "damping" => self.damping = parse_num(0, key, value).map_err(num_err)?,
            "site_damping" => self.site_damping = parse_num(0, key, value).map_err(num_err)?,
            "spectral_source" => {
                self.spectral_source = match value.to_ascii_lowercase().as_str() {
                    "analytic" => SpectralSource::Analytic,
                    "empirical" => SpectralSource::Empirical,
                    other => return Err(Error::Config(format!("unknown spectral source `{other}`"))),
                }
            }
            "mse_normalization" => {
                self.mse_normalization = match value.to_ascii_lowercase().as_str() {
                    "per_coordinate" => MseNormalization::PerCoordinate,
                    "signal_energy" => MseNormalization::SignalEnergy,
                    other => return Err(Error::Config(format!("unknown normalization `{other}`"))),
                }
            }
            "seed" => self.base_seed = parse_num(0, key, value).map_err(num_err)?,
            "out" => self.output_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// `N` for a ratio under [`ROUNDING_RULE`].
    pub fn n_rows(&self, alpha: f64) -> usize {
        (alpha * self.k as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        if self.alpha_list.is_empty() {
            return bad("alpha list is empty".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        for &a in &self.alpha_list {
            if !(a > 0.0) {
                return bad(format!("alpha = {a} must be positive"));
            }
            if self.n_rows(a) == 0 {
                return bad(format!("alpha = {a} gives N = 0 at K = {}", self.k));
            }
            if self.ensemble == EnsembleKind::RowOrthogonalDct && self.n_rows(a) > self.k {
                return bad(format!("dct ensemble needs alpha <= 1, got {a}"));
            }
        }
        if self.ensemble == EnsembleKind::FromFile && self.matrix.is_none() {
            return bad("ensemble = file needs `matrix`".into());
        }
        if self.likelihood == LikelihoodKind::Gaussian && self.noise_var.is_none() {
            return bad("likelihood = gaussian needs `noise_var`".into());
        }
        self.model(1).map_err(|e| Error::Config(e.to_string()))?;
        self.solver(self.algorithms[0])
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Ratios whose product with `K` is not an integer.
    pub fn rounding_notes(&self) -> Vec<String> {
        self.alpha_list
            .iter()
            .filter(|a| {
                let exact = **a * self.k as f64;
                (exact - exact.round()).abs() > 1e-9 * exact.max(1.0)
            })
            .map(|a| format!("alpha * K = {} is not integral; N = {}", a * self.k as f64, self.n_rows(*a)))
            .collect()
    }

    pub fn model(&self, n_rows: usize) -> Result<ModelSpec<f64>> {
        let prior = PriorSpec::spike_slab(self.rho, self.tau)?;
        let likelihood = match self.likelihood {
            LikelihoodKind::Sign => LikelihoodSpec::sign_one_bit(),
            LikelihoodKind::Gaussian => {
                LikelihoodSpec::gaussian_noise(self.noise_var.unwrap_or(f64::NAN))?
            }
        };
        ModelSpec::new(prior, likelihood, n_rows, self.k)
    }

    pub fn solver(&self, algorithm: Algorithm) -> SolverConfig<f64> {
        let mut s = SolverConfig::new(algorithm);
        s.max_iters = self.max_iters;
        s.tol = self.tol;
        s.damping = self.damping;
        s.site_damping = self.site_damping;
        s.spectral_source = self.spectral_source;
        s.mse_normalization = self.mse_normalization;
        s
    }

    /// Matrix ensemble for one ratio and instance seed.
    pub fn ensemble_for(&self, alpha: f64, seed: u64) -> MatrixEnsemble {
        let n = self.n_rows(alpha);
        match self.ensemble {
            EnsembleKind::IidGaussian => MatrixEnsemble::iid_gaussian(n, self.k, seed),
            EnsembleKind::RowOrthogonalDct => MatrixEnsemble::row_orthogonal_dct(n, self.k, seed),
            EnsembleKind::FromFile => MatrixEnsemble::from_file(
                self.matrix.clone().unwrap_or_default(),
                n,
                self.k,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_grammar() {
        let text = "# desk run\nrho = 0.2\nalpha = 1/3, 0.5 ,2/3\nK = 300 # inline\n\
                    algorithms = ep,saep\nensemble = dct\nseed = 7\ntol = 1e-6\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.rho, 0.2);
        assert_eq!(c.alpha_list, vec![1.0 / 3.0, 0.5, 2.0 / 3.0]);
        assert_eq!((c.k, c.base_seed, c.tol), (300, 7, 1e-6));
        assert_eq!(c.algorithms, vec![Algorithm::Ep, Algorithm::Saep]);
        assert_eq!(c.ensemble, EnsembleKind::RowOrthogonalDct);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_malformed_input() {
        for text in ["bogus = 1", "rho 0.1", "trials = -1", "alpha = x", "rho = 1\nrho = 2", "algorithms = vamp"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
        let c = ExperimentConfig::parse("trials = 0").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ExperimentConfig::parse("ensemble = dct\nalpha = 1.5").unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::parse("ensemble = file").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn rounding_rule() {
        let c = ExperimentConfig::parse("K = 100\nalpha = 1/3, 0.5, 0.125").unwrap();
        assert_eq!(c.n_rows(1.0 / 3.0), 33);
        assert_eq!(c.n_rows(0.125), 13);
        assert_eq!(c.rounding_notes().len(), 2);
        let c = ExperimentConfig::parse("K = 1200\nalpha = 1/3, 1/2, 2/3").unwrap();
        assert!(c.rounding_notes().is_empty());
        assert_eq!(c.n_rows(2.0 / 3.0), 800);
    }
}
