//! Spectral fixed point linking the mean susceptibilities to the scalar
//! precisions `(λ_x, λ_z)`:
//!
//! ```text
//! ⟨χ_x⟩ = ∫ dF_K(x) / (λ_x + λ_z x),   ⟨χ_z⟩ = ∫ x dF_N(x) / (λ_x + λ_z x)
//! ```
//!
//! where `F_K`, `F_N` are the eigenvalue laws of `HᵀH` and `HHᵀ`.

use serde::{Deserialize, Serialize};

use super::law::Law;
use super::roots::solve_decreasing;
use super::Side;
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::real::Real;

/// Lower clamp for `λ_x`, `λ_z`.
pub const LAMBDA_MIN: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITERS: usize = 10_000;
const DAMPING: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFixedPoint<T> {
    pub lambda_x: T,
    pub lambda_z: T,
    pub chi_x_mean: T,
    pub chi_z_mean: T,
    pub v_x: T,
    pub v_z: T,
    /// Largest relative residual of the two equations.
    pub residual: T,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Evaluates `(⟨χ_x⟩, ⟨χ_z⟩)` at given `(λ_x, λ_z)`.
pub fn spectral_susceptibilities<T: Real>(
    profile: &SpectralProfile<T>,
    lambda_x: T,
    lambda_z: T,
) -> Result<(T, T)> {
    if !(lambda_x > T::zero() && lambda_z >= T::zero()) {
        return Err(Error::invalid(format!(
            "need lambda_x > 0 and lambda_z >= 0, got ({lambda_x}, {lambda_z})"
        )));
    }
    let kx = Law::new(profile, Side::GramKxK).resolvent(lambda_x, lambda_z);
    let nz = Law::new(profile, Side::GramNxN).resolvent(lambda_x, lambda_z);
    Ok((kx[0], nz[1]))
}

/// Solves for `(λ_x, λ_z)` by damped alternating one-dimensional solves.
///
/// Each half-step solves one equation exactly for one unknown with the
/// other held fixed; both are monotone, so the solves are bracketed. An
/// unknown whose equation has no solution above `LAMBDA_MIN` is clamped
/// there and a warning is recorded.
pub fn solve_spectral_fixed_point<T: Real>(
    profile: &SpectralProfile<T>,
    alpha: T,
    chi_x_target: T,
    chi_z_target: T,
) -> Result<SpectralFixedPoint<T>> {
    let (cx, cz) = (chi_x_target, chi_z_target);
    if !(cx > T::zero() && cx.is_finite() && cz > T::zero() && cz.is_finite()) {
        return Err(Error::invalid(format!(
            "susceptibility targets must be positive and finite, got ({cx}, {cz})"
        )));
    }
    if (alpha - profile.alpha()).abs() > T::lit(1e-9) * alpha.abs().max(T::one()) {
        return Err(Error::invalid(format!(
            "alpha {alpha} does not match the profile ratio {}",
            profile.alpha()
        )));
    }
    let law_k = Law::new(profile, Side::GramKxK);
    let law_n = Law::new(profile, Side::GramNxN);
    let lmin = T::lit(LAMBDA_MIN);
    let one = T::one();
    let mut warnings = Vec::new();

    if law_n.mean() == T::zero() {
        // H = 0: χ_x = 1/λ_x decouples and λ_z is undetermined
        let lambda_x = (one / cx).max(lmin);
        warnings.push("all-zero spectrum: lambda_z undetermined, clamped".to_string());
        let residual = ((one / lambda_x - cx) / cx).abs();
        return Ok(SpectralFixedPoint {
            lambda_x,
            lambda_z: lmin,
            chi_x_mean: cx,
            chi_z_mean: cz,
            v_x: one / cx - lambda_x,
            v_z: one / cz - lmin,
            residual,
            iterations: 1,
            warnings,
        });
    }

    let residual_at = |lx: T, lz: T| {
        let rx = law_k.resolvent(lx, lz)[0];
        let rz = law_n.resolvent(lx, lz)[1];
        (((rx - cx) / cx).abs()).max(((rz - cz) / cz).abs())
    };

    let solve_x = |lz: T| -> Result<(T, bool)> {
        let f = |lx: T| {
            let r = law_k.resolvent(lx, lz);
            (r[0] - cx, r[2])
        };
        if f(lmin).0 <= T::zero() {
            return Ok((lmin, true));
        }
        // 1/(λ_x + λ_z x_max) ≤ χ_x ≤ 1/λ_x
        let hi = one / cx;
        let lo = (hi - lz * law_k.support_max()).max(lmin);
        let lx = solve_decreasing(f, lo, hi, T::lit(0.5) * (lo + hi), "spectral fixed point (lambda_x)")?;
        Ok((lx, false))
    };
    let solve_z = |lx: T| -> Result<(T, bool)> {
        let f = |lz: T| {
            let r = law_n.resolvent(lx, lz);
            (r[1] - cz, r[3])
        };
        if f(lmin).0 <= T::zero() {
            return Ok((lmin, true));
        }
        // x/(λ_x + λ_z x) ≤ 1/λ_z
        let hi = one / cz;
        let lo = lmin;
        let lz = solve_decreasing(f, lo, hi, T::lit(0.5) * (lo + hi), "spectral fixed point (lambda_z)")?;
        Ok((lz, false))
    };

    let damping = T::lit(DAMPING);
    let mut lx = one / cx;
    let mut lz = one;
    let mut clamped_x = false;
    let mut clamped_z = false;
    let mut trace = Vec::new();
    for it in 1..=FIXED_POINT_MAX_ITERS {
        let (nx, cxl) = solve_x(lz)?;
        let (nz, czl) = solve_z(nx)?;
        // a clamped unknown sits on its bound rather than being damped towards it
        let new_x = if cxl { lmin } else { (one - damping) * nx + damping * lx };
        let new_z = if czl { lmin } else { (one - damping) * nz + damping * lz };
        let change = ((new_x - lx).abs() / lx).max((new_z - lz).abs() / lz);
        lx = new_x;
        lz = new_z;
        clamped_x |= cxl;
        clamped_z |= czl;
        let residual = residual_at(lx, lz);
        if trace.len() < 16 || it % 1000 == 0 {
            trace.push(residual);
        }
        let stalled_at_clamp = (cxl || czl) && change <= T::lit(1e-15);
        if residual <= T::lit(FIXED_POINT_TOL) || stalled_at_clamp {
            if clamped_x {
                warnings.push("lambda_x clamped at its lower bound".to_string());
            }
            if clamped_z {
                warnings.push("lambda_z clamped at its lower bound".to_string());
            }
            let (chi_x_mean, chi_z_mean) = (cx, cz);
            return Ok(SpectralFixedPoint {
                lambda_x: lx,
                lambda_z: lz,
                chi_x_mean,
                chi_z_mean,
                v_x: one / cx - lx,
                v_z: one / cz - lz,
                residual,
                iterations: it,
                warnings,
            });
        }
    }
    let trace: Vec<String> = trace.iter().map(|r| format!("{:.3e}", r.to_f64())).collect();
    Err(Error::numerical(
        "spectral fixed point",
        format!(
            "no convergence in {FIXED_POINT_MAX_ITERS} iterations; residual trace [{}]",
            trace.join(", ")
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_round_trip() {
        // K-side: half ones, half zeros; N-side: all ones
        let p = SpectralProfile::<f64>::empirical(vec![1.0; 4], 4, 8).unwrap();
        let (cx, cz) = spectral_susceptibilities(&p, 1.0, 1.0).unwrap();
        assert!((cx - 0.75).abs() < 1e-15);
        assert!((cz - 0.5).abs() < 1e-15);
        let fp = solve_spectral_fixed_point(&p, 0.5, cx, cz).unwrap();
        assert!((fp.lambda_x - 1.0).abs() < 1e-9);
        assert!((fp.lambda_z - 1.0).abs() < 1e-9);
        assert!(fp.warnings.is_empty());
    }

    #[test]
    fn zero_spectrum_decouples() {
        let p = SpectralProfile::<f64>::empirical(vec![0.0; 3], 3, 6).unwrap();
        let fp = solve_spectral_fixed_point(&p, 0.5, 0.25, 0.1).unwrap();
        assert_eq!(fp.lambda_x, 4.0);
        assert!(!fp.warnings.is_empty());
    }

    #[test]
    fn consistency_relations() {
        let p = SpectralProfile::<f64>::empirical(vec![2.1, 1.3, 0.7, 0.2], 4, 10).unwrap();
        let (cx, cz) = spectral_susceptibilities(&p, 0.8, 2.5).unwrap();
        let fp = solve_spectral_fixed_point(&p, 0.4, cx, cz).unwrap();
        assert!((fp.lambda_x - 0.8).abs() < 1e-9);
        assert!((fp.lambda_z - 2.5).abs() < 1e-9);
        assert!((fp.lambda_x - (1.0 / cx - fp.v_x)).abs() < 1e-12);
        let compact = 0.4 * (1.0 - fp.v_z * cz) / cx;
        assert!((fp.v_x - compact).abs() < 1e-9);
    }

    #[test]
    fn unattainable_target_is_clamped() {
        // χ_z can be at most mean/λ_x; ask for far more
        let p = SpectralProfile::<f64>::empirical(vec![1.0, 1.0], 2, 2).unwrap();
        let fp = solve_spectral_fixed_point(&p, 1.0, 0.5, 50.0).unwrap();
        assert_eq!(fp.lambda_z, LAMBDA_MIN);
        assert!(fp.warnings.iter().any(|w| w.contains("lambda_z")));
    }

    #[test]
    fn rejects_bad_targets() {
        let p = SpectralProfile::<f64>::marchenko_pastur(0.5).unwrap();
        assert!(solve_spectral_fixed_point(&p, 0.5, -1.0, 1.0).is_err());
        assert!(solve_spectral_fixed_point(&p, 0.7, 1.0, 1.0).is_err());
    }
}
