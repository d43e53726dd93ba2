//! EP objective whose stationary points are the EP fixed points:
//!
//! ```text
//! C(Λ) = ln|Λ_x + HᵀΛ_zH| − Σ_i ln(Λ_ii + ΛΛ_ii)
//! ```
//!
//! with the sum over both the x- and z-blocks and `ΛΛ` held fixed.

use nalgebra::{DMatrix, DVector};

use crate::dense::{inverse_diagonals, weighted_gram, CholeskyFactor};
use crate::error::{Error, Result};
use crate::real::Real;

fn check_shapes<T: Real>(
    h: &DMatrix<T>,
    site_x: &DVector<T>,
    site_z: &DVector<T>,
    cavity_x: &DVector<T>,
    cavity_z: &DVector<T>,
) -> Result<()> {
    let (n, k) = h.shape();
    if site_x.len() != k || cavity_x.len() != k || site_z.len() != n || cavity_z.len() != n {
        return Err(Error::invalid(format!(
            "diagonal lengths do not match H of shape {n}x{k}"
        )));
    }
    Ok(())
}

fn factor<T: Real>(h: &DMatrix<T>, site_x: &DVector<T>, site_z: &DVector<T>) -> Result<CholeskyFactor<T>> {
    let mut precision = weighted_gram(h, site_z.as_slice());
    for (i, s) in site_x.iter().enumerate() {
        precision[(i, i)] += *s;
    }
    CholeskyFactor::new(precision)
        .ok_or_else(|| Error::invalid("Lambda_x + H^T Lambda_z H is not positive definite"))
}

fn log_sum<T: Real>(site: &DVector<T>, cavity: &DVector<T>) -> Result<T> {
    let mut acc = T::zero();
    for (s, c) in site.iter().zip(cavity.iter()) {
        let t = *s + *c;
        if !(t > T::zero()) {
            return Err(Error::invalid(format!("site + cavity precision {t} is not positive")));
        }
        acc += t.ln();
    }
    Ok(acc)
}

pub fn objective_fe0<T: Real>(
    h: &DMatrix<T>,
    site_x: &DVector<T>,
    site_z: &DVector<T>,
    cavity_x: &DVector<T>,
    cavity_z: &DVector<T>,
) -> Result<T> {
    check_shapes(h, site_x, site_z, cavity_x, cavity_z)?;
    let f = factor(h, site_x, site_z)?;
    Ok(f.log_det() - log_sum(site_x, cavity_x)? - log_sum(site_z, cavity_z)?)
}

/// Analytic gradient with respect to `(Λ_x, Λ_z)`:
/// `diag(Σ_x) − 1/(Λ_x + ΛΛ_x)` and `diag(HΣ_xHᵀ) − 1/(Λ_z + ΛΛ_z)`.
pub fn objective_fe0_gradient<T: Real>(
    h: &DMatrix<T>,
    site_x: &DVector<T>,
    site_z: &DVector<T>,
    cavity_x: &DVector<T>,
    cavity_z: &DVector<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    check_shapes(h, site_x, site_z, cavity_x, cavity_z)?;
    let f = factor(h, site_x, site_z)?;
    let (dx, dz) = inverse_diagonals(&f, h);
    let one = T::one();
    let gx = DVector::from_fn(dx.len(), |i, _| dx[i] - one / (site_x[i] + cavity_x[i]));
    let gz = DVector::from_fn(dz.len(), |j, _| dz[j] - one / (site_z[j] + cavity_z[j]));
    Ok((gx, gz))
}
