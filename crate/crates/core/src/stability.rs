//! AT-line diagnostics at a fixed point.
//!
//! The total susceptibilities
//!
//! ```text
//! χ_x⁽²⁾ = α_x / (1 − α_x R′_{λ_z HᵀH}(−χ_x))
//! χ_z⁽²⁾ = α_m / (1 − α_m R′_{HHᵀ/λ_x}(−χ_m)),   χ_m = v_z(1 − v_z χ_z)
//! ```
//!
//! diverge where the denominators (the margins) vanish; positive margins
//! certify that `Λ_x + HᵀΛ_zH` and `Λ_z` are positive definite. `R′` is taken
//! by Richardson-extrapolated central differences of the scaled R-transform.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dense::{weighted_gram, CholeskyFactor};
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::freeprob::{r_transform_scaled, theorem1_validate, Side};
use crate::real::{mean, Real};
use crate::solvers::FixedPointReport;

/// Relative step of the central difference.
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    /// `1 − α_x R′_{λ_z HᵀH}(−χ_x)`.
    pub margin_x: T,
    /// `1 − α_m R′_{HHᵀ/λ_x}(−χ_m)`.
    pub margin_z: T,
    /// `χ_x⁽²⁾`; `None` when the margin is not positive (divergent).
    pub chi2_x: Option<T>,
    pub chi2_z: Option<T>,
    pub stable: bool,
    pub alpha_x: T,
    pub alpha_m: T,
    /// `χ_m` from the scalar `v_z` and `⟨χ_z⟩`; used for `margin_z`.
    pub chi_m: T,
    /// `⟨ΛΛ_z,i (1 − ΛΛ_z,i χ_z,i)⟩` from the per-coordinate cavities
    /// (equal to `chi_m` for the scalar methods).
    pub chi_m_vector: T,
}

impl<T: Real> StabilityReport<T> {
    /// Messages for non-positive margins, suitable for a report's warnings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.margin_x > T::zero()) {
            out.push(format!("AT margin_x = {} is not positive", self.margin_x));
        }
        if !(self.margin_z > T::zero()) {
            out.push(format!("AT margin_z = {} is not positive", self.margin_z));
        }
        out
    }
}

/// `R′(ω)` by central differences at steps `h` and `h/2`, combined by
/// Richardson extrapolation.
fn r_derivative<T: Real>(profile: &SpectralProfile<T>, side: Side, scale: T, omega: T) -> Result<T> {
    let r = |w: T| {
        r_transform_scaled(profile, side, scale, w).map_err(|e| match e {
            Error::Domain { .. } | Error::InvalidArgument(_) => {
                Error::DiagnosticUnavailable(format!("R-transform at {w}: {e}"))
            }
            other => other,
        })
    };
    let h = T::lit(FD_STEP) * omega.abs().max(T::smallest_positive());
    let two = T::lit(2.0);
    let d1 = (r(omega + h)? - r(omega - h)?) / (two * h);
    let h2 = h / two;
    let d2 = (r(omega + h2)? - r(omega - h2)?) / (two * h2);
    Ok((T::lit(4.0) * d2 - d1) / T::lit(3.0))
}

fn margin_and_chi2<T: Real>(alpha: T, r_prime: T) -> (T, Option<T>) {
    let margin = T::one() - alpha * r_prime;
    let chi2 = (margin > T::zero()).then(|| alpha / margin);
    (margin, chi2)
}

fn finite_positive<T: Real>(what: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DiagnosticUnavailable(format!("{what} = {v} must be finite and positive")))
    }
}

/// `(margin_x, χ_x⁽²⁾)` with `α_x ≈ χ_xᵀχ_x/K` and `χ_x = ⟨χ_x⟩`.
pub fn at_line_x<T: Real>(
    report: &FixedPointReport<T>,
    chi_x: &DVector<T>,
    profile: &SpectralProfile<T>,
) -> Result<(T, Option<T>)> {
    if chi_x.is_empty() {
        return Err(Error::invalid("empty chi_x vector"));
    }
    finite_positive("lambda_z", report.lambda_z)?;
    let chi = mean(chi_x.as_slice());
    finite_positive("<chi_x>", chi)?;
    let alpha_x = chi_x.norm_squared() / T::lit(chi_x.len() as f64);
    let r_prime = r_derivative(profile, Side::GramKxK, report.lambda_z, -chi)?;
    Ok(margin_and_chi2(alpha_x, r_prime))
}

fn chi_m_terms<T: Real>(report: &FixedPointReport<T>, chi_z: &DVector<T>) -> Vec<T> {
    let one = T::one();
    let per_coordinate = report.cavity_z.len() == chi_z.len() && chi_z.len() > 1;
    chi_z
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let v = if per_coordinate { report.cavity_z[i] } else { report.v_z };
            v * (one - v * *c)
        })
        .collect()
}

/// `(margin_z, χ_z⁽²⁾)` with `α_m ≈ (1/N) Σ (v_z(1 − v_z χ_z,i))²` and
/// `χ_m = v_z(1 − v_z⟨χ_z⟩)`.
pub fn at_line_z<T: Real>(
    report: &FixedPointReport<T>,
    chi_z: &DVector<T>,
    profile: &SpectralProfile<T>,
) -> Result<(T, Option<T>)> {
    if chi_z.is_empty() {
        return Err(Error::invalid("empty chi_z vector"));
    }
    finite_positive("lambda_x", report.lambda_x)?;
    finite_positive("v_z", report.v_z)?;
    let one = T::one();
    let v = report.v_z;
    let n = T::lit(chi_z.len() as f64);
    let alpha_m = chi_z
        .iter()
        .fold(T::zero(), |acc, c| {
            let t = v * (one - v * *c);
            acc + t * t
        })
        / n;
    let chi_m = v * (one - v * mean(chi_z.as_slice()));
    if !chi_m.is_finite() {
        return Err(Error::DiagnosticUnavailable(format!("chi_m = {chi_m}")));
    }
    let r_prime = r_derivative(profile, Side::GramNxN, one / report.lambda_x, -chi_m)?;
    Ok(margin_and_chi2(alpha_m, r_prime))
}

/// Both AT lines for a fixed point, using the report's own susceptibility
/// vectors.
pub fn stability_report<T: Real>(
    report: &FixedPointReport<T>,
    profile: &SpectralProfile<T>,
) -> Result<StabilityReport<T>> {
    let (margin_x, chi2_x) = at_line_x(report, &report.chi_x, profile)?;
    let (margin_z, chi2_z) = at_line_z(report, &report.chi_z, profile)?;
    let one = T::one();
    let v = report.v_z;
    let n = report.chi_z.len();
    let alpha_m = report.chi_z.iter().fold(T::zero(), |acc, c| {
        let t = v * (one - v * *c);
        acc + t * t
    }) / T::lit(n as f64);
    Ok(StabilityReport {
        margin_x,
        margin_z,
        chi2_x,
        chi2_z,
        stable: margin_x > T::zero() && margin_z > T::zero(),
        alpha_x: report.chi_x.norm_squared() / T::lit(report.chi_x.len() as f64),
        alpha_m,
        chi_m: v * (one - v * report.chi_z_mean),
        chi_m_vector: mean(&chi_m_terms(report, &report.chi_z)),
    })
}

/// Runs [`stability_report`] and records non-positive margins in the
/// report's warnings.
pub fn attach_stability<T: Real>(
    report: &mut FixedPointReport<T>,
    profile: &SpectralProfile<T>,
) -> Result<StabilityReport<T>> {
    let s = stability_report(report, profile)?;
    report.warnings.extend(s.warnings());
    Ok(s)
}

/// `(1/K) Σ_k [(Λ_x + HᵀΛ_zH)⁻²]_kk`, the finite-size total susceptibility.
pub fn direct_susceptibility_x<T: Real>(
    h: &DMatrix<T>,
    lambda_x_diag: &DVector<T>,
    lambda_z_diag: &DVector<T>,
) -> Result<T> {
    let (n, k) = h.shape();
    if lambda_x_diag.len() != k || lambda_z_diag.len() != n {
        return Err(Error::invalid(format!("diagonal lengths do not match H of shape {n}x{k}")));
    }
    let mut a = weighted_gram(h, lambda_z_diag.as_slice());
    for i in 0..k {
        a[(i, i)] += lambda_x_diag[i];
    }
    let f = CholeskyFactor::new(a)
        .ok_or_else(|| Error::invalid("Lambda_x + H^T Lambda_z H is not positive definite"))?;
    // tr(A⁻²) = ‖A⁻¹‖_F²
    Ok(f.inverse().norm_squared() / T::lit(k as f64))
}

/// `χ_x⁽²⁾` predicted from the spectral quantities of the same diagonals,
/// with the exact `α_x = (1/K) Σ (Λ_x,i + v_x)⁻²`.
pub fn predicted_susceptibility_x<T: Real>(
    h: &DMatrix<T>,
    lambda_x_diag: &DVector<T>,
    lambda_z_diag: &DVector<T>,
) -> Result<Option<T>> {
    let t = theorem1_validate(h, lambda_x_diag, lambda_z_diag)?;
    let profile = crate::ensembles::singular_values(h)?;
    let k = T::lit(lambda_x_diag.len() as f64);
    let alpha_x = lambda_x_diag.iter().fold(T::zero(), |acc, l| {
        let r = T::one() / (*l + t.v_x);
        acc + r * r
    }) / k;
    let r_prime = if t.lambda_z > T::zero() {
        r_derivative(&profile, Side::GramKxK, t.lambda_z, -t.chi_x)?
    } else {
        T::zero()
    };
    Ok(margin_and_chi2(alpha_x, r_prime).1)
}
