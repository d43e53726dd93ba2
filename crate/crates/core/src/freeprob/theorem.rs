//! Log-determinant characterization through spectral quantities:
//!
//! ```text
//! ln|Λ_x + HᵀΛ_zH| ≈ ln|Λ_x + v_x I| + ln|Λ_z + v_z I| + ln|λ_x I + λ_z HᵀH|
//!                    + K ln χ_x + N ln χ_z
//! ```
//!
//! with `χ_a = Tr(Λ_a + v_a I)⁻¹ / dim_a`, `λ_a = 1/χ_a − v_a`, and
//! `(χ_x, χ_z)` the spectral susceptibilities of `HᵀH` at `(λ_x, λ_z)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::law::Law;
use super::roots::solve_decreasing;
use super::transforms::{r_transform, s_transform};
use super::Side;
use crate::dense::{weighted_gram, CholeskyFactor};
use crate::ensembles::{singular_values, SpectralProfile};
use crate::error::{Error, Result};
use crate::real::Real;

const MAX_ITERS: usize = 5_000;
const TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report<T> {
    pub lhs_per_k: T,
    pub rhs_per_k: T,
    /// `|lhs − rhs| / K`.
    pub gap: T,
    pub v_x: T,
    pub v_z: T,
    pub lambda_x: T,
    pub lambda_z: T,
    pub chi_x: T,
    pub chi_z: T,
    /// Largest deviation between `(v_x, v_z)` and their R-/S-transform
    /// expressions `λ_z R_K(−λ_z χ_x)` and `λ_x S_N(−λ_z χ_z)`.
    pub transform_residual: T,
    pub iterations: usize,
}

/// Solves `(1/d) Σ 1/(Λ_i + v) = c` for `v`; the root lies in
/// `[1/c − max Λ, 1/c − min Λ]`.
fn cavity_for_trace<T: Real>(diag: &[T], c: T) -> Result<T> {
    let (mut lo_l, mut hi_l) = (diag[0], diag[0]);
    for &d in diag {
        lo_l = lo_l.min(d);
        hi_l = hi_l.max(d);
    }
    let inv = T::one() / c;
    if hi_l == lo_l {
        return Ok(inv - lo_l);
    }
    let n = T::lit(diag.len() as f64);
    solve_decreasing(
        |v| {
            let (mut s, mut ds) = (T::zero(), T::zero());
            for &d in diag {
                let r = T::one() / (d + v);
                s += r;
                ds -= r * r;
            }
            (s / n - c, ds / n)
        },
        inv - hi_l,
        inv - lo_l,
        inv - T::lit(0.5) * (lo_l + hi_l),
        "trace inversion",
    )
}

/// Compares both sides of the log-determinant formula on a concrete matrix.
pub fn theorem1_validate<T: Real>(
    h: &DMatrix<T>,
    lambda_x_diag: &DVector<T>,
    lambda_z_diag: &DVector<T>,
) -> Result<Theorem1Report<T>> {
    let (n, k) = h.shape();
    if lambda_x_diag.len() != k || lambda_z_diag.len() != n {
        return Err(Error::invalid(format!(
            "diagonal lengths ({}, {}) do not match H of shape {n}x{k}",
            lambda_x_diag.len(),
            lambda_z_diag.len()
        )));
    }
    if lambda_z_diag.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::invalid("lambda_z entries must be finite and non-negative"));
    }
    if lambda_x_diag.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("lambda_x entries must be finite"));
    }
    let mut precision = weighted_gram(h, lambda_z_diag.as_slice());
    for i in 0..k {
        precision[(i, i)] += lambda_x_diag[i];
    }
    let factor = CholeskyFactor::new(precision)
        .ok_or_else(|| Error::invalid("Lambda_x + H^T Lambda_z H is not positive definite"))?;
    let lhs = factor.log_det();

    if lambda_x_diag.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::invalid(
            "lambda_x entries must be positive for the spectral characterization",
        ));
    }
    let profile = singular_values(h)?;
    let law_k = Law::new(&profile, Side::GramKxK);
    let law_n = Law::new(&profile, Side::GramNxN);
    let lx_diag = lambda_x_diag.as_slice();
    let lz_diag = lambda_z_diag.as_slice();

    let one = T::one();
    // start from the arithmetic means; λ_a stays within the range of Λ_a
    let mut lx = crate::real::mean(lx_diag);
    let mut lz = crate::real::mean(lz_diag);
    let mut state = None;
    for it in 1..=MAX_ITERS {
        let chi_x = law_k.resolvent(lx, lz)[0];
        let chi_z = if lz > T::zero() {
            law_n.resolvent(lx, lz)[1]
        } else {
            law_n.mean() / lx
        };
        if !(chi_z > T::zero()) {
            // H = 0: the z-block decouples entirely
            state = Some((lx, T::zero(), chi_x, T::zero(), one / chi_x - lx, T::zero(), it));
            break;
        }
        let v_x = cavity_for_trace(lx_diag, chi_x)?;
        let v_z = cavity_for_trace(lz_diag, chi_z)?;
        let nx = one / chi_x - v_x;
        let nz = one / chi_z - v_z;
        let change = ((nx - lx).abs() / lx).max(if lz > T::zero() {
            (nz - lz).abs() / lz
        } else {
            nz.abs()
        });
        lx = nx;
        lz = nz.max(T::zero());
        if change <= T::lit(TOL) {
            state = Some((lx, lz, chi_x, chi_z, v_x, v_z, it));
            break;
        }
    }
    let (lx, lz, chi_x, chi_z, v_x, v_z, iterations) = state.ok_or_else(|| {
        Error::numerical("theorem-1 equations", format!("no convergence in {MAX_ITERS} iterations"))
    })?;

    let kf = T::lit(k as f64);
    let nf = T::lit(n as f64);
    let mut rhs = T::zero();
    for &d in lx_diag {
        rhs += (d + v_x).ln();
    }
    if chi_z > T::zero() {
        for &d in lz_diag {
            rhs += (d + v_z).ln();
        }
        rhs += nf * chi_z.ln();
    }
    rhs += kf * law_k.integrate(|x| (lx + lz * x).ln())?;
    rhs += kf * chi_x.ln();

    let transform_residual = transform_cross_check(&profile, lx, lz, chi_x, chi_z, v_x, v_z)?;
    Ok(Theorem1Report {
        lhs_per_k: lhs / kf,
        rhs_per_k: rhs / kf,
        gap: (lhs - rhs).abs() / kf,
        v_x,
        v_z,
        lambda_x: lx,
        lambda_z: lz,
        chi_x,
        chi_z,
        transform_residual,
        iterations,
    })
}

fn transform_cross_check<T: Real>(
    profile: &SpectralProfile<T>,
    lx: T,
    lz: T,
    chi_x: T,
    chi_z: T,
    v_x: T,
    v_z: T,
) -> Result<T> {
    if lz == T::zero() || chi_z == T::zero() {
        return Ok(v_x.abs());
    }
    let vx_r = lz * r_transform(profile, Side::GramKxK, -lz * chi_x)?;
    let vz_s = lx * s_transform(profile, Side::GramNxN, -lz * chi_z)?;
    Ok((vx_r - v_x).abs().max((vz_s - v_z).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, MatrixEnsemble};

    #[test]
    fn scalar_diagonals_on_orthogonal_matrix() {
        let h: DMatrix<f64> = generate(&MatrixEnsemble::row_orthogonal_dct(40, 40, 1)).unwrap();
        let (a, b) = (1.3, 0.6);
        let rep = theorem1_validate(&h, &DVector::from_element(40, a), &DVector::from_element(40, b)).unwrap();
        // ln|(a + b) I| per coordinate
        assert!((rep.lhs_per_k - (a + b).ln()).abs() < 1e-10);
        assert!((rep.lambda_x - a).abs() < 1e-12 && (rep.lambda_z - b).abs() < 1e-12);
        assert!(rep.gap < 1e-10, "gap {}", rep.gap);
        assert!(rep.transform_residual < 1e-8);
    }

    #[test]
    fn zero_lambda_z_collapses() {
        let h: DMatrix<f64> = generate(&MatrixEnsemble::iid_gaussian(10, 30, 4)).unwrap();
        let lx = DVector::from_fn(30, |i, _| 0.5 + 0.05 * i as f64);
        let rep = theorem1_validate(&h, &lx, &DVector::zeros(10)).unwrap();
        let expect: f64 = lx.iter().map(|v| v.ln()).sum::<f64>() / 30.0;
        assert!((rep.lhs_per_k - expect).abs() < 1e-12);
        assert!(rep.v_x.abs() < 1e-12);
        assert!(rep.gap < 1e-10, "gap {}", rep.gap);
    }

    #[test]
    fn rejects_indefinite_input() {
        let h = DMatrix::<f64>::zeros(2, 3);
        let lx = DVector::from_row_slice(&[1.0, -1.0, 1.0]);
        assert!(matches!(
            theorem1_validate(&h, &lx, &DVector::zeros(2)),
            Err(Error::InvalidArgument(_))
        ));
    }
}
