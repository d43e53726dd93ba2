//! Stieltjes, R- and S-transforms of a spectral profile.

use super::law::Law;
use super::roots::solve_decreasing;
use super::Side;
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::real::Real;

fn domain_err<T: Real>(transform: &'static str, argument: T, domain: String) -> Error {
    Error::Domain {
        transform,
        argument: argument.to_f64(),
        domain,
    }
}

fn check_scale<T: Real>(scale: T) -> Result<()> {
    if scale > T::zero() && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("spectral scale must be positive, got {scale}")))
    }
}

/// `G(s) = ∫ dF(x)/(s − x)` for `s < 0`.
pub fn stieltjes<T: Real>(profile: &SpectralProfile<T>, side: Side, s: T) -> Result<T> {
    if !(s < T::zero()) || !s.is_finite() {
        return Err(domain_err("stieltjes", s, "(-inf, 0)".into()));
    }
    Ok(Law::new(profile, side).stieltjes(s).0)
}

/// `χ = ∫ x⁻¹ dF`, `+∞` when the law charges (or accumulates at) zero.
pub fn chi<T: Real>(profile: &SpectralProfile<T>, side: Side) -> T {
    Law::new(profile, side).chi()
}

/// `α′ = 1 − F(0)`.
pub fn nonzero_mass<T: Real>(profile: &SpectralProfile<T>, side: Side) -> T {
    Law::new(profile, side).nonzero_mass()
}

/// `∫ x dF`.
pub fn spectral_mean<T: Real>(profile: &SpectralProfile<T>, side: Side) -> T {
    Law::new(profile, side).mean()
}

/// R-transform `R(ω) = G⁻¹(ω) − 1/ω` on `[−χ, 0]`.
pub fn r_transform<T: Real>(profile: &SpectralProfile<T>, side: Side, omega: T) -> Result<T> {
    r_transform_scaled(profile, side, T::one(), omega)
}

/// R-transform of the law of `scale · x`.
pub fn r_transform_scaled<T: Real>(
    profile: &SpectralProfile<T>,
    side: Side,
    scale: T,
    omega: T,
) -> Result<T> {
    check_scale(scale)?;
    let law = Law::scaled(profile, side, scale);
    check_r_domain(&law, omega)?;
    let one = T::one();
    match (profile, side) {
        (SpectralProfile::MarchenkoPastur { alpha }, Side::GramKxK) => {
            Ok(scale * *alpha / (one - scale * omega))
        }
        (SpectralProfile::MarchenkoPastur { alpha }, Side::GramNxN) => {
            Ok(scale / (one - scale * *alpha * omega))
        }
        (SpectralProfile::Projection { .. }, Side::GramNxN) => Ok(scale),
        (SpectralProfile::Projection { alpha }, Side::GramKxK) => {
            Ok(scale * projection_k_r(*alpha, scale * omega))
        }
        _ => r_by_inversion(&law, omega),
    }
}

/// R-transform computed by inverting the Stieltjes transform, bypassing
/// any closed form.
pub fn r_transform_numeric<T: Real>(profile: &SpectralProfile<T>, side: Side, omega: T) -> Result<T> {
    let law = Law::new(profile, side);
    check_r_domain(&law, omega)?;
    r_by_inversion(&law, omega)
}

fn check_r_domain<T: Real>(law: &Law<'_, T>, omega: T) -> Result<()> {
    let chi = law.chi();
    if omega.is_finite() && omega <= T::zero() && (omega > -chi || (chi.is_finite() && omega == -chi)) {
        Ok(())
    } else {
        Err(domain_err("r_transform", omega, format!("[-{chi}, 0]")))
    }
}

fn r_by_inversion<T: Real>(law: &Law<'_, T>, omega: T) -> Result<T> {
    if omega == T::zero() {
        return Ok(law.mean());
    }
    let chi = law.chi();
    if omega == -chi {
        return Ok(T::one() / chi);
    }
    // write G⁻¹(ω) = 1/ω + r with r ∈ [0, min(x_max, −1/ω)]; solving for r
    // directly avoids cancellation in G⁻¹(ω) − 1/ω for small |ω|
    let inv = T::one() / omega;
    let hi = law.support_max().min(-inv);
    if hi <= T::zero() {
        return Ok(T::zero());
    }
    let start = law.mean().min(T::lit(0.5) * hi);
    solve_decreasing(
        |r| {
            let (g, dg) = law.stieltjes(inv + r);
            (g - omega, dg)
        },
        T::zero(),
        hi,
        start,
        "Stieltjes inversion",
    )
}

/// Closed-form R-transform of `(1 − α)δ₀ + αδ₁`: the negative root of
/// `ω s² − (ω + 1) s + (1 − α) = 0`, minus `1/ω`.
fn projection_k_r<T: Real>(alpha: T, omega: T) -> T {
    let one = T::one();
    if omega == T::zero() {
        return alpha;
    }
    let b = omega + one;
    let c = one - alpha;
    let disc = (b * b - T::lit(4.0) * omega * c).sqrt();
    let s = if b >= T::zero() {
        (b + disc) / (T::lit(2.0) * omega)
    } else {
        T::lit(2.0) * c / (b - disc)
    };
    s - one / omega
}

/// S-transform `S(z) = ((z + 1)/z) Ψ⁻¹(z)` on `(−α′, 0]`.
pub fn s_transform<T: Real>(profile: &SpectralProfile<T>, side: Side, z: T) -> Result<T> {
    let law = Law::new(profile, side);
    check_s_domain(&law, z)?;
    let one = T::one();
    match (profile, side) {
        (SpectralProfile::MarchenkoPastur { alpha }, Side::GramKxK) => Ok(one / (*alpha + z)),
        (SpectralProfile::MarchenkoPastur { alpha }, Side::GramNxN) => Ok(one / (one + *alpha * z)),
        (SpectralProfile::Projection { .. }, Side::GramNxN) => Ok(one),
        (SpectralProfile::Projection { alpha }, Side::GramKxK) => Ok((one + z) / (*alpha + z)),
        _ => s_by_inversion(&law, z),
    }
}

/// S-transform computed by inverting `Ψ`, bypassing any closed form.
pub fn s_transform_numeric<T: Real>(profile: &SpectralProfile<T>, side: Side, z: T) -> Result<T> {
    let law = Law::new(profile, side);
    check_s_domain(&law, z)?;
    s_by_inversion(&law, z)
}

fn check_s_domain<T: Real>(law: &Law<'_, T>, z: T) -> Result<()> {
    let a = law.nonzero_mass();
    if z.is_finite() && z <= T::zero() && z > -a {
        Ok(())
    } else {
        Err(domain_err("s_transform", z, format!("(-{a}, 0]")))
    }
}

/// Substituting `s = −1/t` turns `Ψ(s) = z` into `∫ x/(t + x) dF = −z`,
/// decreasing in `t > 0`, and gives `S(z) = (1 + z)/(−z t)`.
fn s_by_inversion<T: Real>(law: &Law<'_, T>, z: T) -> Result<T> {
    let mean = law.mean();
    if z == T::zero() {
        return Ok(T::one() / mean);
    }
    let b = -z;
    // x/(t+x) ≤ x/t and ≥ x/(t + x_max) bracket the root
    let hi = mean / b;
    let lo = (hi - law.support_max()).max(T::zero());
    let t = solve_decreasing(
        |t| {
            let (p, dp) = law.psi_pair(t);
            (p - b, -dp)
        },
        lo,
        hi,
        T::lit(0.5) * (lo + hi),
        "S-transform inversion",
    )?;
    Ok((T::one() + z) / (b * t))
}

/// `|S(ω R(ω)) R(ω) − 1|`.
pub fn rs_duality_check<T: Real>(profile: &SpectralProfile<T>, side: Side, omega: T) -> Result<T> {
    let r = r_transform(profile, side, omega)?;
    let s = s_transform(profile, side, omega * r)?;
    Ok((s * r - T::one()).abs())
}

/// A transform evaluation request.
#[derive(Clone, Debug)]
pub struct TransformQuery<'a, T> {
    pub profile: &'a SpectralProfile<T>,
    pub side: Side,
    pub argument: T,
}

impl<'a, T: Real> TransformQuery<'a, T> {
    pub fn new(profile: &'a SpectralProfile<T>, side: Side, argument: T) -> Self {
        TransformQuery {
            profile,
            side,
            argument,
        }
    }

    pub fn stieltjes(&self) -> Result<T> {
        stieltjes(self.profile, self.side, self.argument)
    }

    pub fn r_transform(&self) -> Result<T> {
        r_transform(self.profile, self.side, self.argument)
    }

    pub fn s_transform(&self) -> Result<T> {
        s_transform(self.profile, self.side, self.argument)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(a: f64) -> SpectralProfile<f64> {
        SpectralProfile::<f64>::marchenko_pastur(a).unwrap()
    }

    fn unit(n: usize, k: usize) -> SpectralProfile<f64> {
        SpectralProfile::<f64>::empirical(vec![1.0; n.min(k)], n, k).unwrap()
    }

    #[test]
    fn stieltjes_of_atoms() {
        let g = stieltjes(&unit(4, 4), Side::GramNxN, -1.0).unwrap();
        assert!((g + 0.5).abs() < 1e-15);
        let proj = SpectralProfile::<f64>::projection(0.5).unwrap();
        assert!((stieltjes(&proj, Side::GramKxK, -1.0).unwrap() + 0.75).abs() < 1e-15);
        assert!(stieltjes(&proj, Side::GramKxK, 0.0).is_err());
    }

    #[test]
    fn numeric_r_matches_closed_forms() {
        let r = r_transform_numeric(&mp(0.5), Side::GramKxK, -1.0).unwrap();
        assert!((r - 0.25).abs() < 1e-9);
        for &a in &[0.2, 0.5, 1.5] {
            for side in [Side::GramKxK, Side::GramNxN] {
                let p = mp(a);
                let lim = chi(&p, side).min(5.0);
                for i in 1..10 {
                    let w = -lim * i as f64 / 10.0;
                    let exact = r_transform(&p, side, w).unwrap();
                    let num = r_transform_numeric(&p, side, w).unwrap();
                    assert!((exact - num).abs() < 1e-9 * exact.abs(), "a={a} {side:?} w={w}");
                }
            }
        }
        let proj = SpectralProfile::<f64>::projection(0.3).unwrap();
        for &w in &[-0.01, -0.5, -2.0, -40.0] {
            let exact = r_transform(&proj, Side::GramKxK, w).unwrap();
            let num = r_transform_numeric(&proj, Side::GramKxK, w).unwrap();
            assert!((exact - num).abs() < 1e-10, "w={w}: {exact} vs {num}");
        }
    }

    #[test]
    fn numeric_s_matches_closed_forms() {
        for &a in &[0.3, 0.5, 2.0] {
            for side in [Side::GramKxK, Side::GramNxN] {
                let p = mp(a);
                let amax = nonzero_mass(&p, side);
                for i in 1..10 {
                    let z = -amax * i as f64 / 10.0;
                    let exact = s_transform(&p, side, z).unwrap();
                    let num = s_transform_numeric(&p, side, z).unwrap();
                    assert!((exact - num).abs() < 1e-9 * exact, "a={a} {side:?} z={z}");
                }
            }
        }
        let v = s_transform(&mp(0.5), Side::GramNxN, -0.5).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-15);
        let s = s_transform(&unit(3, 5), Side::GramKxK, -0.3).unwrap();
        assert!((s - (1.0 - 0.3) / (0.6 - 0.3)).abs() < 1e-10);
        let s = s_transform(&unit(5, 5), Side::GramKxK, -0.3).unwrap();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn point_mass_r_is_constant() {
        let p = SpectralProfile::<f64>::empirical(vec![2.0; 6], 6, 6).unwrap();
        for &w in &[-0.2, -0.1, -1e-6, -0.25] {
            assert!((r_transform(&p, Side::GramKxK, w).unwrap() - 4.0).abs() < 1e-12);
        }
        assert!(r_transform(&p, Side::GramKxK, -0.3).is_err());
        assert!(r_transform(&p, Side::GramKxK, 0.1).is_err());
    }

    #[test]
    fn boundary_value_of_r() {
        let p = SpectralProfile::<f64>::empirical(vec![2.0, 1.0, 0.5], 3, 3).unwrap();
        let c = chi(&p, Side::GramKxK);
        let at = r_transform(&p, Side::GramKxK, -c).unwrap();
        let near = r_transform(&p, Side::GramKxK, -c * (1.0 - 1e-9)).unwrap();
        assert!((at * c - 1.0).abs() < 1e-15);
        assert!((near * c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scaled_r_uses_the_scaling_property() {
        let p = SpectralProfile::<f64>::empirical(vec![1.7, 1.2, 0.4], 3, 5).unwrap();
        for &c in &[0.5, 3.0] {
            let w = -0.7;
            let lhs = r_transform_scaled(&p, Side::GramKxK, c, w).unwrap();
            let rhs = c * r_transform(&p, Side::GramKxK, c * w).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn duality_on_closed_forms() {
        assert!(rs_duality_check(&mp(1.0 / 3.0), Side::GramKxK, -0.4).unwrap() < 1e-9);
        let proj = SpectralProfile::<f64>::projection(0.4).unwrap();
        assert!(rs_duality_check(&proj, Side::GramKxK, -0.9).unwrap() < 1e-12);
        assert!(rs_duality_check(&unit(4, 4), Side::GramNxN, -0.5).unwrap() < 1e-12);
    }

    #[test]
    fn f32_transforms() {
        let p = SpectralProfile::<f32>::marchenko_pastur(0.5).unwrap();
        let r = r_transform_numeric(&p, Side::GramKxK, -1.0f32).unwrap();
        assert!((r - 0.25).abs() < 1e-4);
    }
}
