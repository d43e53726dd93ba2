//! The message sweep shared by EP, AMP and SAEP.

use nalgebra::{DMatrix, DVector};

use super::SolverState;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scalar_models::{likelihood_moments_into, prior_moments_into, Cavity, ModelSpec};

fn divergence(iteration: usize, what: &str, err: Error) -> Error {
    Error::Divergence {
        iteration,
        detail: format!("{what}: {err}"),
    }
}

fn check_finite<T: Real>(v: &DVector<T>, iteration: usize, what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Divergence {
            iteration,
            detail: format!("non-finite {what} at index {i}"),
        }),
    }
}

fn check_positive<T: Real>(v: &DVector<T>, iteration: usize, what: &str) -> Result<()> {
    match v.iter().position(|x| !(*x > T::zero())) {
        None => Ok(()),
        Some(i) => Err(Error::Divergence {
            iteration,
            detail: format!("non-positive {what} {} at index {i}", v[i]),
        }),
    }
}

/// `new ← (1 − d)·proposed + d·old`, in place on `proposed`.
fn damp<T: Real>(proposed: &mut DVector<T>, old: &DVector<T>, damping: T) {
    if damping > T::zero() {
        let keep = T::one() - damping;
        proposed.zip_apply(old, |p, o| *p = keep * *p + damping * o);
    }
}

/// One message sweep with the cavity vectors already set for this iteration:
///
/// ```text
/// ρ_z ← ΛΛ_z ⊙ Hη_x − m
/// (η_z, χ_z) ← likelihood moments at (ρ_z, ΛΛ_z)
/// m ← ΛΛ_z ⊙ η_z − ρ_z
/// ρ_x ← ΛΛ_x ⊙ η_x + Hᵀm
/// (η_x, χ_x) ← prior moments at (ρ_x, ΛΛ_x)
/// ```
///
/// Each of `ρ_z`, `m`, `ρ_x` is damped against its previous value.
pub fn tap_sweep<T: Real>(
    state: &mut SolverState<T>,
    model: &ModelSpec<T>,
    h: &DMatrix<T>,
    y: &DVector<T>,
    damping: T,
) -> Result<()> {
    sweep_z(state, model, h, y, damping)?;
    sweep_x(state, model, h, damping)
}

/// First half of [`tap_sweep`]: the z-block, ending with the new `m`.
pub(super) fn sweep_z<T: Real>(
    state: &mut SolverState<T>,
    model: &ModelSpec<T>,
    h: &DMatrix<T>,
    y: &DVector<T>,
    damping: T,
) -> Result<()> {
    let it = state.iteration;
    let mut rho_z = h * &state.eta_x;
    rho_z.component_mul_assign(&state.cavity_z);
    rho_z -= &state.m;
    damp(&mut rho_z, &state.rho_z, damping);
    check_finite(&rho_z, it, "rho_z")?;
    state.rho_z = rho_z;

    likelihood_moments_into(
        &model.likelihood,
        y.as_slice(),
        state.rho_z.as_slice(),
        Cavity::PerCoordinate(state.cavity_z.as_slice()),
        state.eta_z.as_mut_slice(),
        state.chi_z.as_mut_slice(),
    )
    .map_err(|e| divergence(it, "likelihood moments", e))?;
    check_positive(&state.chi_z, it, "chi_z")?;

    let mut m = state.eta_z.component_mul(&state.cavity_z);
    m -= &state.rho_z;
    damp(&mut m, &state.m, damping);
    check_finite(&m, it, "m")?;
    state.m = m;
    Ok(())
}

/// Second half of [`tap_sweep`]: the x-block.
pub(super) fn sweep_x<T: Real>(
    state: &mut SolverState<T>,
    model: &ModelSpec<T>,
    h: &DMatrix<T>,
    damping: T,
) -> Result<()> {
    let it = state.iteration;
    let mut rho_x = h.tr_mul(&state.m);
    rho_x += state.eta_x.component_mul(&state.cavity_x);
    damp(&mut rho_x, &state.rho_x, damping);
    check_finite(&rho_x, it, "rho_x")?;
    state.rho_x = rho_x;

    prior_moments_into(
        &model.prior,
        state.rho_x.as_slice(),
        Cavity::PerCoordinate(state.cavity_x.as_slice()),
        state.eta_x.as_mut_slice(),
        state.chi_x.as_mut_slice(),
    )
    .map_err(|e| divergence(it, "prior moments", e))?;
    check_positive(&state.chi_x, it, "chi_x")?;
    Ok(())
}
