//! Integral identities of the R- and S-transforms, used as a standing
//! correctness check of the transform code:
//!
//! ```text
//! ∫₀ᵃ R(−ω) dω   = 1 + ln a − ε a + ∫ ln(ε + x) dF,   ε = 1/a − R(−a)
//! ∫₀ᵇ ln S(−z) dz = H(b) + (1 − b) ln ε − ∫ ln(ε + x) dF,   ε = (1 − b)/(b S(−b))
//! ```
//!
//! with `H(b) = (b − 1) ln(1 − b) − b ln b`.

use serde::{Deserialize, Serialize};

use super::law::Law;
use super::quadrature::integrate;
use super::transforms::{r_transform, s_transform};
use super::Side;
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaResiduals<T> {
    pub r_residual: T,
    pub s_residual: T,
}

/// Interior evaluation points: `a = ½ min(χ, 1)` and `b = ½ α′`.
pub fn default_lemma_points<T: Real>(profile: &SpectralProfile<T>, side: Side) -> (T, T) {
    let law = Law::new(profile, side);
    let half = T::lit(0.5);
    (half * law.chi().min(T::one()), half * law.nonzero_mass())
}

/// Absolute deviations between the two sides of both identities, with
/// `a ∈ (0, χ)` and `b ∈ (0, α′)`.
pub fn lemma_identity_checks<T: Real>(
    profile: &SpectralProfile<T>,
    side: Side,
    a: T,
    b: T,
) -> Result<LemmaResiduals<T>> {
    let law = Law::new(profile, side);
    if !(a > T::zero() && a < law.chi()) {
        return Err(Error::invalid(format!("a = {a} outside (0, {})", law.chi())));
    }
    if !(b > T::zero() && b < law.nonzero_mass()) {
        return Err(Error::invalid(format!("b = {b} outside (0, {})", law.nonzero_mass())));
    }
    let one = T::one();
    let abs_tol = T::lit(1e-13);
    let rel_tol = T::lit(1e-12);

    let r_lhs = integrate(|w| r_transform(profile, side, -w), T::zero(), a, abs_tol, rel_tol)?;
    let eps_r = one / a - r_transform(profile, side, -a)?;
    let r_rhs = one + a.ln() - eps_r * a + law.integrate(|x| (eps_r + x).ln())?;

    let s_lhs = integrate(
        |z| s_transform(profile, side, -z).map(|s| s.ln()),
        T::zero(),
        b,
        abs_tol,
        rel_tol,
    )?;
    let eps_s = (one - b) / (b * s_transform(profile, side, -b)?);
    let entropy = (b - one) * (one - b).ln() - b * b.ln();
    let s_rhs = entropy + (one - b) * eps_s.ln() - law.integrate(|x| (eps_s + x).ln())?;

    Ok(LemmaResiduals {
        r_residual: (r_lhs - r_rhs).abs(),
        s_residual: (s_lhs - s_rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_identities() {
        let p = SpectralProfile::<f64>::empirical(vec![1.0; 5], 5, 5).unwrap();
        let res = lemma_identity_checks(&p, Side::GramKxK, 0.5, 0.25).unwrap();
        assert!(res.r_residual < 1e-10 && res.s_residual < 1e-10, "{res:?}");
    }

    #[test]
    fn analytic_profiles() {
        let mp = SpectralProfile::<f64>::marchenko_pastur(0.5).unwrap();
        let res = lemma_identity_checks(&mp, Side::GramKxK, 0.3, 0.25).unwrap();
        assert!(res.r_residual < 1e-7 && res.s_residual < 1e-7, "{res:?}");
        let proj = SpectralProfile::<f64>::projection(0.5).unwrap();
        let res = lemma_identity_checks(&proj, Side::GramKxK, 0.3, 0.25).unwrap();
        assert!(res.r_residual < 1e-7 && res.s_residual < 1e-7, "{res:?}");
    }

    #[test]
    fn rejects_points_outside_domain() {
        let p = SpectralProfile::<f64>::empirical(vec![1.0; 3], 3, 3).unwrap();
        assert!(lemma_identity_checks(&p, Side::GramKxK, 1.5, 0.2).is_err());
        assert!(lemma_identity_checks(&p, Side::GramKxK, 0.5, 1.0).is_err());
    }
}
