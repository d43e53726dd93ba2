//! EP, AMP and SAEP as one fixed-point harness.
//!
//! All three run the same message sweep ([`tap_sweep`]) and differ only in
//! how the cavity precisions are refreshed before each sweep:
//!
//! * EP keeps per-coordinate site and cavity precisions and needs
//!   `diag((Λ_x + HᵀΛ_zH)⁻¹)` every iteration;
//! * AMP and SAEP keep two scalars `v_x`, `v_z` updated from averaged
//!   susceptibilities, SAEP through the S-transform of `HHᵀ`.

mod cavity;
mod objective;
mod tap;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use cavity::{amp_cavity_update, ep_cavity_update, saep_cavity_update, ScalarCavities};
pub use objective::{objective_fe0, objective_fe0_gradient};
pub use tap::tap_sweep;

use crate::ensembles::{singular_values, SpectralProfile};
use crate::error::{Error, Result};
use crate::real::{mean, Real};
use crate::scalar_models::{likelihood_moments_into, prior_moments_into, Cavity, ModelSpec};

/// Lower clamp on the normalized squared error, i.e. −400 dB.
const MSE_FLOOR: f64 = 1e-40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ep,
    Amp,
    Saep,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ep, Algorithm::Amp, Algorithm::Saep];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ep => "ep",
            Algorithm::Amp => "amp",
            Algorithm::Saep => "saep",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ep" => Ok(Algorithm::Ep),
            "amp" => Ok(Algorithm::Amp),
            "saep" => Ok(Algorithm::Saep),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Where SAEP takes the spectrum of `HHᵀ` from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralSource {
    /// The limiting law of the ensemble, supplied with the problem.
    Analytic,
    /// Singular values of the concrete `H`.
    Empirical,
}

/// How the squared error in `mse_trajectory` is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseNormalization {
    /// `‖η_x − x‖² / K`.
    #[default]
    PerCoordinate,
    /// `‖η_x − x‖² / ‖x‖²`.
    SignalEnergy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Init<T: Real> {
    /// `ρ = m = 0`; see [`SolverState::initial`].
    ZeroMessages,
    Custom(Box<SolverState<T>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T: Real> {
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// Threshold on `‖η_x(t) − η_x(t−1)‖∞`.
    pub tol: T,
    /// Damping of the messages `ρ_x`, `ρ_z`, `m`.
    pub damping: T,
    /// Damping of the EP site precisions `Λ_x`, `Λ_z`; unused otherwise.
    pub site_damping: T,
    pub spectral_source: SpectralSource,
    pub init: Init<T>,
    pub mse_normalization: MseNormalization,
}

impl<T: Real> SolverConfig<T> {
    /// Defaults: 100 iterations, `tol = 1e-7`, undamped messages, EP site
    /// damping 0.3, analytic spectrum.
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            max_iters: 100,
            tol: T::lit(1e-7),
            damping: T::zero(),
            site_damping: T::lit(0.3),
            spectral_source: SpectralSource::Analytic,
            init: Init::ZeroMessages,
            mse_normalization: MseNormalization::PerCoordinate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > T::zero()) || !self.tol.is_finite() {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        for (what, d) in [("damping", self.damping), ("site_damping", self.site_damping)] {
            if !(d >= T::zero() && d < T::one()) {
                return Err(Error::Config(format!("{what} must lie in [0, 1), got {d}")));
            }
        }
        Ok(())
    }
}

/// Complete iterate of the message sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverState<T: Real> {
    pub rho_x: DVector<T>,
    pub rho_z: DVector<T>,
    pub m: DVector<T>,
    pub eta_x: DVector<T>,
    pub eta_z: DVector<T>,
    pub chi_x: DVector<T>,
    pub chi_z: DVector<T>,
    /// `ΛΛ_x` diagonal; constant `v_x` for AMP/SAEP.
    pub cavity_x: DVector<T>,
    /// `ΛΛ_z` diagonal; constant `v_z` for AMP/SAEP.
    pub cavity_z: DVector<T>,
    /// `Λ_x` diagonal (EP only).
    pub site_x: DVector<T>,
    /// `Λ_z` diagonal (EP only).
    pub site_z: DVector<T>,
    pub iteration: usize,
}

impl<T: Real> SolverState<T> {
    /// Starting point for [`Init::ZeroMessages`].
    ///
    /// Messages are zero and `ΛΛ_x = 1`. The prior moments at that cavity fix
    /// the x-sites `Λ_x = 1/χ_x − 1` (1 if that is not positive). The
    /// likelihood sites start uninformative, `Λ_z = 0`, so the consistent
    /// z-cavity is `ΛΛ_z = 1/diag(H Λ_x⁻¹ Hᵀ)`, where the likelihood moments
    /// are then evaluated.
    pub fn initial(model: &ModelSpec<T>, h: &DMatrix<T>, y: &DVector<T>) -> Result<Self> {
        let (n, k) = (model.n_rows, model.n_cols);
        if y.len() != n || h.shape() != (n, k) {
            return Err(Error::invalid(format!(
                "H ({}x{}) and y ({}) do not match an {n}x{k} model",
                h.nrows(),
                h.ncols(),
                y.len()
            )));
        }
        let one = T::one();
        let mut state = SolverState {
            rho_x: DVector::zeros(k),
            rho_z: DVector::zeros(n),
            m: DVector::zeros(n),
            eta_x: DVector::zeros(k),
            eta_z: DVector::zeros(n),
            chi_x: DVector::zeros(k),
            chi_z: DVector::zeros(n),
            cavity_x: DVector::from_element(k, one),
            cavity_z: DVector::from_element(n, one),
            site_x: DVector::from_element(k, one),
            site_z: DVector::zeros(n),
            iteration: 0,
        };
        prior_moments_into(
            &model.prior,
            state.rho_x.as_slice(),
            Cavity::Uniform(one),
            state.eta_x.as_mut_slice(),
            state.chi_x.as_mut_slice(),
        )?;
        state.site_x = state.chi_x.map(|c| {
            let s = one / c - one;
            if s > T::zero() && s.is_finite() {
                s
            } else {
                one
            }
        });
        for j in 0..n {
            let spread = h
                .row(j)
                .iter()
                .zip(state.site_x.iter())
                .fold(T::zero(), |acc, (hj, s)| acc + *hj * *hj / *s);
            if spread > T::zero() {
                state.cavity_z[j] = one / spread;
            }
        }
        likelihood_moments_into(
            &model.likelihood,
            y.as_slice(),
            state.rho_z.as_slice(),
            Cavity::PerCoordinate(state.cavity_z.as_slice()),
            state.eta_z.as_mut_slice(),
            state.chi_z.as_mut_slice(),
        )?;
        Ok(state)
    }

    fn check_dims(&self, n: usize, k: usize) -> Result<()> {
        let k_ok = [&self.rho_x, &self.eta_x, &self.chi_x, &self.cavity_x, &self.site_x]
            .iter()
            .all(|v| v.len() == k);
        let n_ok = [&self.rho_z, &self.m, &self.eta_z, &self.chi_z, &self.cavity_z, &self.site_z]
            .iter()
            .all(|v| v.len() == n);
        if k_ok && n_ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("custom state does not match an {n}x{k} problem")))
        }
    }
}

/// One inference problem: model, matrix, observations and optional extras.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a, T: Real> {
    pub model: &'a ModelSpec<T>,
    pub h: &'a DMatrix<T>,
    pub y: &'a DVector<T>,
    /// Limiting spectrum used by SAEP with [`SpectralSource::Analytic`].
    pub profile: Option<&'a SpectralProfile<T>>,
    /// Ground truth; enables the MSE trajectory.
    pub x_true: Option<&'a DVector<T>>,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(model: &'a ModelSpec<T>, h: &'a DMatrix<T>, y: &'a DVector<T>) -> Self {
        Problem {
            model,
            h,
            y,
            profile: None,
            x_true: None,
        }
    }

    pub fn with_profile(mut self, profile: &'a SpectralProfile<T>) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_truth(mut self, x_true: &'a DVector<T>) -> Self {
        self.x_true = Some(x_true);
        self
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = (self.model.n_rows, self.model.n_cols);
        if self.h.shape() != (n, k) {
            return Err(Error::invalid(format!(
                "H has shape {}x{}, model expects {n}x{k}",
                self.h.nrows(),
                self.h.ncols()
            )));
        }
        if self.y.len() != n {
            return Err(Error::invalid(format!("y has length {}, expected {n}", self.y.len())));
        }
        for (i, y) in self.y.iter().enumerate() {
            self.model.likelihood.check_observation(*y).map_err(|e| e.at_index(i))?;
        }
        if let Some(x) = self.x_true {
            if x.len() != k {
                return Err(Error::invalid(format!("x_true has length {}, expected {k}", x.len())));
            }
        }
        if let Some(p) = self.profile {
            let a = p.alpha();
            if (a - self.model.alpha()).abs() > T::lit(1e-9) * a.max(T::one()) {
                return Err(Error::invalid(format!(
                    "profile ratio {a} differs from N/K = {}",
                    self.model.alpha()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport<T: Real> {
    pub algorithm: Algorithm,
    pub converged: bool,
    /// Set when the run stopped on a divergence or instability.
    pub diverged: bool,
    pub iterations: usize,
    pub final_residual: T,
    pub v_x: T,
    pub v_z: T,
    pub lambda_x: T,
    pub lambda_z: T,
    pub chi_x_mean: T,
    pub chi_z_mean: T,
    /// `(iteration, mse_db)`; empty without ground truth.
    pub mse_trajectory: Vec<(usize, T)>,
    /// Final `ΛΛ_x`: one entry per coordinate for EP, a single scalar otherwise.
    pub cavity_x: Vec<T>,
    pub cavity_z: Vec<T>,
    pub eta_x: DVector<T>,
    pub chi_x: DVector<T>,
    pub chi_z: DVector<T>,
    pub warnings: Vec<String>,
}

/// Normalized squared error in dB, floored at −400 dB.
pub fn mse_db<T: Real>(estimate: &DVector<T>, truth: &DVector<T>, norm: MseNormalization) -> T {
    let err = (estimate - truth).norm_squared();
    let denom = match norm {
        MseNormalization::PerCoordinate => T::lit(truth.len() as f64),
        MseNormalization::SignalEnergy => truth.norm_squared(),
    };
    let ratio = if denom > T::zero() { err / denom } else { err };
    T::lit(10.0) * ratio.max(T::lit(MSE_FLOOR)).log10()
}

/// Iterate-by-iterate driver; [`run`] loops it to convergence.
pub struct Solver<'a, T: Real> {
    problem: Problem<'a, T>,
    config: SolverConfig<T>,
    alpha: T,
    profile: Option<SpectralProfile<T>>,
    state: SolverState<T>,
    v_x: T,
    v_z: T,
    residual: T,
    mse: Vec<(usize, T)>,
    warnings: Vec<String>,
}

impl<'a, T: Real> Solver<'a, T> {
    pub fn new(problem: Problem<'a, T>, config: SolverConfig<T>) -> Result<Self> {
        config.validate()?;
        problem.validate()?;
        let (n, k) = problem.h.shape();
        let mut warnings = Vec::new();
        let profile = match config.algorithm {
            Algorithm::Saep => match (config.spectral_source, problem.profile) {
                (SpectralSource::Analytic, Some(p)) => Some(p.clone()),
                (SpectralSource::Analytic, None) => {
                    warnings.push("no analytic profile supplied; using the singular values of H".into());
                    Some(singular_values(problem.h)?)
                }
                (SpectralSource::Empirical, _) => Some(singular_values(problem.h)?),
            },
            _ => None,
        };
        let state = match &config.init {
            Init::ZeroMessages => SolverState::initial(problem.model, problem.h, problem.y)?,
            Init::Custom(s) => {
                s.check_dims(n, k)?;
                (**s).clone()
            }
        };
        let v_x = mean(state.cavity_x.as_slice());
        let v_z = mean(state.cavity_z.as_slice());
        Ok(Solver {
            alpha: problem.model.alpha(),
            problem,
            config,
            profile,
            state,
            v_x,
            v_z,
            residual: T::infinity(),
            mse: Vec::new(),
            warnings,
        })
    }

    pub fn state(&self) -> &SolverState<T> {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    /// Current scalar cavities (means of the cavity vectors for EP).
    pub fn cavities(&self) -> (T, T) {
        (self.v_x, self.v_z)
    }

    pub fn residual(&self) -> T {
        self.residual
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// One cavity update and one message sweep; returns `‖Δη_x‖∞`.
    ///
    /// EP refreshes all precisions before the sweep. AMP and SAEP set `v_z`
    /// first and compute `v_x` from the `χ_z` produced by the z-half of the
    /// same sweep, which keeps `v_z⟨χ_z⟩ < 1` for log-concave likelihoods.
    pub fn step(&mut self) -> Result<T> {
        self.state.iteration += 1;
        let previous = self.state.eta_x.clone();
        let (model, h, y) = (self.problem.model, self.problem.h, self.problem.y);
        let damping = self.config.damping;
        match self.config.algorithm {
            Algorithm::Ep => {
                let w = ep_cavity_update(&mut self.state, h, self.config.site_damping)?;
                self.warnings.extend(w);
                self.v_x = mean(self.state.cavity_x.as_slice());
                self.v_z = mean(self.state.cavity_z.as_slice());
                tap::tap_sweep(&mut self.state, model, h, y, damping)?;
            }
            Algorithm::Amp | Algorithm::Saep => {
                let v_z = self.scalar_cavities(true)?.v_z;
                self.check_cavity("v_z", v_z)?;
                self.v_z = v_z;
                self.state.cavity_z.fill(v_z);
                tap::sweep_z(&mut self.state, model, h, y, damping)?;
                let v_x = self.scalar_cavities(false)?.v_x;
                self.check_cavity("v_x", v_x)?;
                self.v_x = v_x;
                self.state.cavity_x.fill(v_x);
                tap::sweep_x(&mut self.state, model, h, damping)?;
            }
        }
        self.residual = (&self.state.eta_x - previous).amax();
        if let Some(x) = self.problem.x_true {
            let it = self.state.iteration;
            self.mse
                .push((it, mse_db(&self.state.eta_x, x, self.config.mse_normalization)));
        }
        Ok(self.residual)
    }

    fn scalar_cavities(&mut self, report_clamp: bool) -> Result<ScalarCavities<T>> {
        let cav = match &self.profile {
            Some(p) => saep_cavity_update(&self.state, p, self.alpha, self.v_x)?,
            None => amp_cavity_update(&self.state, self.alpha)?,
        };
        if cav.clamped && report_clamp {
            self.warnings.push(format!(
                "iteration {}: S-transform argument clamped to its domain",
                self.state.iteration
            ));
        }
        Ok(cav)
    }

    fn check_cavity(&self, what: &str, value: T) -> Result<()> {
        if value > T::zero() && value.is_finite() {
            Ok(())
        } else {
            Err(Error::Divergence {
                iteration: self.state.iteration,
                detail: format!("cavity precision {what} = {value}"),
            })
        }
    }

    pub fn into_report(self, converged: bool, diverged: bool) -> FixedPointReport<T> {
        let one = T::one();
        let chi_x_mean = mean(self.state.chi_x.as_slice());
        let chi_z_mean = mean(self.state.chi_z.as_slice());
        let (cavity_x, cavity_z) = match self.config.algorithm {
            Algorithm::Ep => (
                self.state.cavity_x.as_slice().to_vec(),
                self.state.cavity_z.as_slice().to_vec(),
            ),
            _ => (vec![self.v_x], vec![self.v_z]),
        };
        let mut warnings = self.warnings;
        let lambda_x = one / chi_x_mean - self.v_x;
        let lambda_z = one / chi_z_mean - self.v_z;
        if converged && (lambda_x < T::zero() || lambda_z < T::zero()) {
            warnings.push(format!("negative spectral precision: lambda_x = {lambda_x}, lambda_z = {lambda_z}"));
        }
        FixedPointReport {
            algorithm: self.config.algorithm,
            converged,
            diverged,
            iterations: self.state.iteration,
            final_residual: self.residual,
            v_x: self.v_x,
            v_z: self.v_z,
            lambda_x,
            lambda_z,
            chi_x_mean,
            chi_z_mean,
            mse_trajectory: self.mse,
            cavity_x,
            cavity_z,
            eta_x: self.state.eta_x,
            chi_x: self.state.chi_x,
            chi_z: self.state.chi_z,
            warnings,
        }
    }
}

fn is_run_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::Divergence { .. } | Error::Instability { .. } | Error::InvalidState(_) | Error::Domain { .. }
    ) || err.is_numerical()
}

/// Runs the configured algorithm until `‖Δη_x‖∞ ≤ tol` or `max_iters`.
///
/// Numerical breakdown mid-run yields a report with `converged = false`;
/// only malformed inputs produce an `Err`.
pub fn run<T: Real>(problem: Problem<'_, T>, config: SolverConfig<T>) -> Result<FixedPointReport<T>> {
    if problem.model.prior.is_degenerate() {
        return degenerate_prior_report(problem, config);
    }
    let mut solver = Solver::new(problem, config)?;
    let tol = solver.config.tol;
    let max_iters = solver.config.max_iters;
    while solver.state.iteration < max_iters {
        match solver.step() {
            Ok(r) if r <= tol => return Ok(solver.into_report(true, false)),
            Ok(_) => {}
            Err(e) if is_run_failure(&e) => {
                solver.warnings.push(format!("stopped: {e}"));
                return Ok(solver.into_report(false, true));
            }
            Err(e) => return Err(e),
        }
    }
    solver
        .warnings
        .push(format!("no convergence in {max_iters} iterations"));
    Ok(solver.into_report(false, false))
}

/// `ρ = 0`: the posterior is a point mass at zero.
fn degenerate_prior_report<T: Real>(
    problem: Problem<'_, T>,
    config: SolverConfig<T>,
) -> Result<FixedPointReport<T>> {
    config.validate()?;
    problem.validate()?;
    let (n, k) = problem.h.shape();
    let eta_x = DVector::zeros(k);
    let mse_trajectory = problem
        .x_true
        .map(|x| vec![(1, mse_db(&eta_x, x, config.mse_normalization))])
        .unwrap_or_default();
    let scalar = |len: usize| match config.algorithm {
        Algorithm::Ep => vec![T::one(); len],
        _ => vec![T::one()],
    };
    Ok(FixedPointReport {
        algorithm: config.algorithm,
        converged: true,
        diverged: false,
        iterations: 1,
        final_residual: T::zero(),
        v_x: T::one(),
        v_z: T::one(),
        lambda_x: T::infinity(),
        lambda_z: T::infinity(),
        chi_x_mean: T::zero(),
        chi_z_mean: T::zero(),
        mse_trajectory,
        cavity_x: scalar(k),
        cavity_z: scalar(n),
        eta_x,
        chi_x: DVector::zeros(k),
        chi_z: DVector::zeros(n),
        warnings: vec!["slab weight is zero; the posterior mean is identically zero".into()],
    })
}
