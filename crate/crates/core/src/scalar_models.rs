//! First and second moments of the one-dimensional tilted densities
//!
//! ```text
//! q_x(x) ∝ f(x)   · exp(-v_x x²/2 + ρ_x x)
//! q_z(z) ∝ f(y|z) · exp(-v_z z²/2 + ρ_z z)
//! ```
//!
//! for a spike-and-slab (or Gaussian) prior and a one-bit sign (or Gaussian
//! noise) likelihood. All evaluations are closed form; the spike/slab
//! responsibilities are computed in log space and the truncated-Gaussian
//! moments switch to an asymptotic expansion deep in the tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{sigmoid, Real};

/// Standardized truncation point beyond which the asymptotic expansion is used.
const TAIL_SWITCH: f64 = 8.0;
const MIN_VARIANCE: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorFamily {
    SpikeSlab,
    Gaussian,
}

/// Spike-and-slab prior `(1-ρ)δ(x) + ρ N(x | 0, τ)`.
///
/// The Gaussian family is the same density with `rho = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec<T> {
    pub family: PriorFamily,
    pub rho: T,
    pub tau: T,
}

impl<T: Real> PriorSpec<T> {
    pub fn spike_slab(rho: T, tau: T) -> Result<Self> {
        let prior = PriorSpec {
            family: PriorFamily::SpikeSlab,
            rho,
            tau,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn gaussian(tau: T) -> Result<Self> {
        let prior = PriorSpec {
            family: PriorFamily::Gaussian,
            rho: T::one(),
            tau,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Weight of the Gaussian slab.
    pub fn slab_weight(&self) -> T {
        match self.family {
            PriorFamily::SpikeSlab => self.rho,
            PriorFamily::Gaussian => T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= T::zero() && self.rho <= T::one()) {
            return Err(Error::invalid(format!(
                "slab weight rho = {} must lie in [0, 1]",
                self.rho
            )));
        }
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(Error::invalid(format!(
                "slab variance tau = {} must be positive",
                self.tau
            )));
        }
        if self.family == PriorFamily::Gaussian && self.rho != T::one() {
            return Err(Error::invalid("Gaussian prior requires rho = 1"));
        }
        Ok(())
    }

    /// True when the prior is a point mass at zero.
    pub fn is_degenerate(&self) -> bool {
        self.slab_weight() == T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LikelihoodFamily {
    /// `f(y|z) = 1{y = sign(z)}` with labels in {-1, +1}.
    SignOneBit,
    /// `f(y|z) = N(y | z, noise_var)`.
    GaussianNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec<T> {
    pub family: LikelihoodFamily,
    pub noise_var: Option<T>,
}

impl<T: Real> LikelihoodSpec<T> {
    pub fn sign_one_bit() -> Self {
        LikelihoodSpec {
            family: LikelihoodFamily::SignOneBit,
            noise_var: None,
        }
    }

    pub fn gaussian_noise(noise_var: T) -> Result<Self> {
        let lik = LikelihoodSpec {
            family: LikelihoodFamily::GaussianNoise,
            noise_var: Some(noise_var),
        };
        lik.validate()?;
        Ok(lik)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.family, self.noise_var) {
            (LikelihoodFamily::SignOneBit, _) => Ok(()),
            (LikelihoodFamily::GaussianNoise, Some(s)) if s > T::zero() && s.is_finite() => Ok(()),
            (LikelihoodFamily::GaussianNoise, _) => Err(Error::invalid(
                "Gaussian noise likelihood requires a positive noise variance",
            )),
        }
    }

    /// Checks that `y` lies in the support of the observation model.
    pub fn check_observation(&self, y: T) -> Result<()> {
        match self.family {
            LikelihoodFamily::SignOneBit if y == T::one() || y == -T::one() => Ok(()),
            LikelihoodFamily::SignOneBit => Err(Error::invalid(format!(
                "one-bit observation must be -1 or +1, got {y}"
            ))),
            LikelihoodFamily::GaussianNoise if y.is_finite() => Ok(()),
            LikelihoodFamily::GaussianNoise => {
                Err(Error::invalid(format!("non-finite observation {y}")))
            }
        }
    }
}

/// Complete description of the inference problem `y ~ f(y | Hx)`, `x ~ f(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    pub prior: PriorSpec<T>,
    pub likelihood: LikelihoodSpec<T>,
    /// Number of observations N.
    pub n_rows: usize,
    /// Signal dimension K.
    pub n_cols: usize,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(
        prior: PriorSpec<T>,
        likelihood: LikelihoodSpec<T>,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        prior.validate()?;
        likelihood.validate()?;
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        Ok(ModelSpec {
            prior,
            likelihood,
            n_rows,
            n_cols,
        })
    }

    /// Aspect ratio α = N / K.
    pub fn alpha(&self) -> T {
        T::lit(self.n_rows as f64) / T::lit(self.n_cols as f64)
    }
}

/// Mean and variance of a tilted density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedMoments<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Real> TiltedMoments<T> {
    fn checked(mean: T, variance: T) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() {
            return Err(Error::numerical(
                "tilted moments",
                format!("non-finite result (mean {mean}, variance {variance})"),
            ));
        }
        if variance < T::lit(MIN_VARIANCE) {
            return Err(Error::DegenerateMoment {
                variance: variance.to_f64(),
            });
        }
        Ok(TiltedMoments { mean, variance })
    }
}

fn check_inputs<T: Real>(rho: T, v: T, what: &str) -> Result<()> {
    if !rho.is_finite() || !v.is_finite() {
        return Err(Error::invalid(format!(
            "{what}: non-finite input (rho = {rho}, v = {v})"
        )));
    }
    if v <= T::zero() {
        return Err(Error::invalid(format!(
            "{what}: cavity precision must be positive, got {v}"
        )));
    }
    Ok(())
}

/// Moments of `q(x) ∝ f(x) exp(-v x²/2 + ρ x)` for the spike-and-slab prior.
pub fn prior_tilted_moments<T: Real>(
    prior: &PriorSpec<T>,
    rho_x: T,
    v_x: T,
) -> Result<TiltedMoments<T>> {
    prior.validate()?;
    check_inputs(rho_x, v_x, "prior moments")?;

    let half = T::lit(0.5);
    let precision = v_x + T::one() / prior.tau;
    let slab_mean = rho_x / precision;
    let slab_var = T::one() / precision;

    let w = prior.slab_weight();
    if w == T::one() {
        return TiltedMoments::checked(slab_mean, slab_var);
    }
    if w == T::zero() {
        return Err(Error::DegenerateMoment { variance: 0.0 });
    }

    // log of slab and spike normalizers; their difference is the log-odds of
    // the slab responsibility.
    let log_slab = w.ln() - half * (prior.tau * precision).ln() + half * rho_x * slab_mean;
    let log_spike = (T::one() - w).ln();
    let log_odds = log_slab - log_spike;
    let resp = sigmoid(log_odds);
    let resp_spike = sigmoid(-log_odds);

    let mean = resp * slab_mean;
    let variance = resp * slab_var + resp * resp_spike * slab_mean * slab_mean;
    TiltedMoments::checked(mean, variance)
}

/// Moments of `q(z) ∝ f(y|z) exp(-v z²/2 + ρ z)`.
pub fn likelihood_tilted_moments<T: Real>(
    lik: &LikelihoodSpec<T>,
    y: T,
    rho_z: T,
    v_z: T,
) -> Result<TiltedMoments<T>> {
    lik.check_observation(y)?;
    check_inputs(rho_z, v_z, "likelihood moments")?;
    match lik.family {
        LikelihoodFamily::SignOneBit => {
            let sd = T::one() / v_z.sqrt();
            // Standardized location of the base Gaussian relative to the
            // truncation boundary, oriented so that the kept side is positive.
            let a = y * rho_z * sd;
            let (m, s2) = truncated_standard_moments(a);
            TiltedMoments::checked(y * m * sd, s2 * sd * sd)
        }
        LikelihoodFamily::GaussianNoise => {
            let noise = lik
                .noise_var
                .ok_or_else(|| Error::invalid("missing noise variance"))?;
            let precision = v_z + T::one() / noise;
            TiltedMoments::checked((rho_z + y / noise) / precision, T::one() / precision)
        }
    }
}

/// Mean and variance of `N(a, 1)` truncated to `(0, ∞)`.
pub(crate) fn truncated_standard_moments<T: Real>(a: T) -> (T, T) {
    if a >= -T::lit(TAIL_SWITCH) {
        mills_moments(a)
    } else {
        tail_moments(-a)
    }
}

fn mills_moments<T: Real>(a: T) -> (T, T) {
    let lambda = inverse_mills(a);
    (a + lambda, T::one() - lambda * (lambda + a))
}

fn tail_moments<T: Real>(u: T) -> (T, T) {
    let j0 = tail_moment_series(0, u);
    let j1 = tail_moment_series(1, u);
    let j2 = tail_moment_series(2, u);
    let mean = j1 / j0;
    (mean, j2 / j0 - mean * mean)
}

/// `φ(a) / Φ(a)` for `a >= -TAIL_SWITCH`.
fn inverse_mills<T: Real>(a: T) -> T {
    let half = T::lit(0.5);
    let cdf = half * (-a * T::lit(std::f64::consts::FRAC_1_SQRT_2)).erfc();
    let pdf = (-half * a * a).exp() / (T::two_pi()).sqrt();
    pdf / cdf
}

/// Asymptotic expansion of `J_k(u) = ∫_0^∞ w^k exp(-u w - w²/2) dw` for large `u`.
///
/// Terms are `(-1/2)^n (k+2n)! / (n! u^(k+2n+1))`; the sum is truncated at the
/// smallest term.
fn tail_moment_series<T: Real>(k: usize, u: T) -> T {
    let mut term = T::one() / u;
    for i in 1..=k {
        term *= T::lit(i as f64) / u;
    }
    let inv_u2 = T::one() / (u * u);
    let mut sum = term;
    let mut last = term.abs();
    for n in 0..200usize {
        let kn = (k + 2 * n) as f64;
        let ratio = -T::lit((kn + 1.0) * (kn + 2.0) / (2.0 * (n as f64 + 1.0))) * inv_u2;
        let next = term * ratio;
        if next.abs() >= last {
            break;
        }
        term = next;
        last = term.abs();
        sum += term;
        if last <= T::machine_epsilon() * T::lit(1e-3) * sum.abs() {
            break;
        }
    }
    sum
}

/// Cavity precision applied to a batch of coordinates.
#[derive(Clone, Copy, Debug)]
pub enum Cavity<'a, T> {
    Uniform(T),
    PerCoordinate(&'a [T]),
}

impl<T: Real> Cavity<'_, T> {
    fn at(&self, i: usize) -> T {
        match self {
            Cavity::Uniform(v) => *v,
            Cavity::PerCoordinate(v) => v[i],
        }
    }

    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        match self {
            Cavity::PerCoordinate(v) if v.len() != n => Err(Error::invalid(format!(
                "{what}: cavity vector has length {}, expected {n}",
                v.len()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchMoments<T> {
    pub eta_x: Vec<T>,
    pub chi_x: Vec<T>,
    pub eta_z: Vec<T>,
    pub chi_z: Vec<T>,
}

/// Prior moments for every coordinate of `rho_x`, written into `eta`/`chi`.
pub fn prior_moments_into<T: Real>(
    prior: &PriorSpec<T>,
    rho_x: &[T],
    v_x: Cavity<'_, T>,
    eta: &mut [T],
    chi: &mut [T],
) -> Result<()> {
    v_x.check_len(rho_x.len(), "prior moments")?;
    for (i, &r) in rho_x.iter().enumerate() {
        let m = prior_tilted_moments(prior, r, v_x.at(i)).map_err(|e| e.at_index(i))?;
        eta[i] = m.mean;
        chi[i] = m.variance;
    }
    Ok(())
}

/// Likelihood moments for every coordinate of `rho_z`, written into `eta`/`chi`.
pub fn likelihood_moments_into<T: Real>(
    lik: &LikelihoodSpec<T>,
    y: &[T],
    rho_z: &[T],
    v_z: Cavity<'_, T>,
    eta: &mut [T],
    chi: &mut [T],
) -> Result<()> {
    if y.len() != rho_z.len() {
        return Err(Error::invalid(format!(
            "observation length {} does not match rho_z length {}",
            y.len(),
            rho_z.len()
        )));
    }
    v_z.check_len(rho_z.len(), "likelihood moments")?;
    for (i, (&yi, &r)) in y.iter().zip(rho_z).enumerate() {
        let m = likelihood_tilted_moments(lik, yi, r, v_z.at(i)).map_err(|e| e.at_index(i))?;
        eta[i] = m.mean;
        chi[i] = m.variance;
    }
    Ok(())
}

/// Elementwise tilted moments for both blocks of the model.
pub fn batch_tilted_moments<T: Real>(
    model: &ModelSpec<T>,
    rho_x: &[T],
    rho_z: &[T],
    y: &[T],
    v_x: Cavity<'_, T>,
    v_z: Cavity<'_, T>,
) -> Result<BatchMoments<T>> {
    let mut out = BatchMoments {
        eta_x: vec![T::zero(); rho_x.len()],
        chi_x: vec![T::zero(); rho_x.len()],
        eta_z: vec![T::zero(); rho_z.len()],
        chi_z: vec![T::zero(); rho_z.len()],
    };
    prior_moments_into(&model.prior, rho_x, v_x, &mut out.eta_x, &mut out.chi_x)?;
    likelihood_moments_into(
        &model.likelihood,
        y,
        rho_z,
        v_z,
        &mut out.eta_z,
        &mut out.chi_z,
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spike_slab(rho: f64, tau: f64) -> PriorSpec<f64> {
        PriorSpec::spike_slab(rho, tau).unwrap()
    }

    #[test]
    fn gaussian_prior_is_conjugate() {
        let m = prior_tilted_moments(&spike_slab(1.0, 1.0), 2.0, 1.0).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.variance, 0.5);
        let g = prior_tilted_moments(&PriorSpec::gaussian(1.0).unwrap(), 2.0, 1.0).unwrap();
        assert_eq!(g, m);
    }

    #[test]
    fn symmetric_field_gives_zero_mean() {
        let m = prior_tilted_moments(&spike_slab(0.1, 1.0), 0.0, 1.0).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!(m.variance > 0.0);
    }

    #[test]
    fn huge_fields_do_not_overflow() {
        // rho²/(v + 1/tau) far beyond the exp range
        let m = prior_tilted_moments(&spike_slab(0.1, 1.0), 1e4, 1.0).unwrap();
        assert_relative_eq!(m.mean, 1e4 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(m.variance, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_prior_is_rejected() {
        let err = prior_tilted_moments(&spike_slab(0.0, 1.0), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateMoment { .. }));
    }

    #[test]
    fn invalid_inputs() {
        assert!(PriorSpec::spike_slab(1.5, 1.0).is_err());
        assert!(PriorSpec::spike_slab(0.5, 0.0).is_err());
        let p = spike_slab(0.5, 1.0);
        assert!(prior_tilted_moments(&p, f64::NAN, 1.0).is_err());
        assert!(prior_tilted_moments(&p, 0.0, 0.0).is_err());
        let lik = LikelihoodSpec::sign_one_bit();
        assert!(matches!(
            likelihood_tilted_moments(&lik, 0.5, 0.0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(LikelihoodSpec::gaussian_noise(-1.0).is_err());
    }

    #[test]
    fn half_normal_moments() {
        let lik = LikelihoodSpec::sign_one_bit();
        let m = likelihood_tilted_moments(&lik, 1.0, 0.0, 1.0).unwrap();
        let mean = (2.0 / std::f64::consts::PI).sqrt();
        assert_relative_eq!(m.mean, mean, max_relative = 1e-14);
        assert_relative_eq!(m.variance, 1.0 - 2.0 / std::f64::consts::PI, max_relative = 1e-14);
        let n = likelihood_tilted_moments(&lik, -1.0, 0.0, 1.0).unwrap();
        assert_eq!(n.mean, -m.mean);
        assert_eq!(n.variance, m.variance);
    }

    #[test]
    fn tail_switch_is_continuous() {
        // both branches evaluated at the switch point itself
        let (m_lo, v_lo) = tail_moments(TAIL_SWITCH);
        let (m_hi, v_hi) = mills_moments(-TAIL_SWITCH);
        assert_relative_eq!(m_lo, m_hi, max_relative = 1e-12);
        assert_relative_eq!(v_lo, v_hi, max_relative = 1e-10);
    }

    #[test]
    fn deep_tail_matches_leading_asymptotics() {
        // mean ≈ 1/u, variance ≈ 1/u² for a truncation far in the tail
        let u = 1e3;
        let (m, v) = truncated_standard_moments(-u);
        assert_relative_eq!(m, 1.0 / u, max_relative = 1e-5);
        assert_relative_eq!(v, 1.0 / (u * u), max_relative = 1e-5);
    }

    #[test]
    fn gaussian_noise_likelihood() {
        let lik = LikelihoodSpec::gaussian_noise(0.5).unwrap();
        let m = likelihood_tilted_moments(&lik, 1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(m.mean, 3.0 / 4.0);
        assert_relative_eq!(m.variance, 0.25);
    }

    #[test]
    fn batch_matches_scalar_and_reports_index() {
        let model = ModelSpec::new(spike_slab(0.2, 1.0), LikelihoodSpec::sign_one_bit(), 2, 2)
            .unwrap();
        let empty = batch_tilted_moments(&model, &[], &[], &[], Cavity::Uniform(1.0), Cavity::Uniform(1.0))
            .unwrap();
        assert!(empty.eta_x.is_empty() && empty.chi_z.is_empty());

        let out = batch_tilted_moments(
            &model,
            &[0.3, 0.3],
            &[-0.2, -0.2],
            &[1.0, 1.0],
            Cavity::Uniform(1.5),
            Cavity::Uniform(0.7),
        )
        .unwrap();
        let px = prior_tilted_moments(&model.prior, 0.3, 1.5).unwrap();
        let pz = likelihood_tilted_moments(&model.likelihood, 1.0, -0.2, 0.7).unwrap();
        assert_eq!(out.eta_x, vec![px.mean; 2]);
        assert_eq!(out.chi_z, vec![pz.variance; 2]);

        let err = batch_tilted_moments(
            &model,
            &[0.0, 0.0],
            &[0.0, 0.0],
            &[1.0, 3.0],
            Cavity::Uniform(1.0),
            Cavity::Uniform(1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AtIndex { index: 1, .. }));
    }

    #[test]
    fn single_precision_kernels() {
        let p = PriorSpec::<f32>::spike_slab(1.0, 1.0).unwrap();
        let m = prior_tilted_moments(&p, 2.0f32, 1.0).unwrap();
        assert_eq!(m.mean, 1.0f32);
        let lik = LikelihoodSpec::<f32>::sign_one_bit();
        let z = likelihood_tilted_moments(&lik, 1.0f32, 0.0, 1.0).unwrap();
        assert!((z.mean - 0.797_884_6).abs() < 1e-6);
    }
}
