//! Cavity-precision updates: scalar (AMP, SAEP) and per-coordinate (EP).

use nalgebra::{DMatrix, DVector};

use super::SolverState;
use crate::dense::{inverse_diagonals, weighted_gram, CholeskyFactor};
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::freeprob::{nonzero_mass, s_transform, Side};
use crate::real::{mean, Real};

/// Scalar cavity precisions for one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarCavities<T> {
    pub v_x: T,
    pub v_z: T,
    /// Set when the S-transform argument had to be moved into its domain.
    pub clamped: bool,
}

fn mean_chi<T: Real>(chi: &DVector<T>, what: &str) -> Result<T> {
    let m = mean(chi.as_slice());
    if m > T::zero() && m.is_finite() {
        Ok(m)
    } else {
        Err(Error::InvalidState(format!("mean {what} must be positive, got {m}")))
    }
}

/// `v_z = 1/⟨χ_x⟩`, `v_x = α(1 − v_z⟨χ_z⟩)/⟨χ_x⟩`.
pub fn amp_cavity_update<T: Real>(state: &SolverState<T>, alpha: T) -> Result<ScalarCavities<T>> {
    let cx = mean_chi(&state.chi_x, "chi_x")?;
    let cz = mean(state.chi_z.as_slice());
    let v_z = T::one() / cx;
    let v_x = alpha * (T::one() - v_z * cz) / cx;
    Ok(ScalarCavities {
        v_x,
        v_z,
        clamped: false,
    })
}

/// `v_z = (1/⟨χ_x⟩ − v_x_prev)·S_{HHᵀ}(−v_x_prev⟨χ_x⟩/α)` followed by the
/// same `v_x` update as AMP.
///
/// An S-transform argument outside `(−α′, 0]` is moved to the nearest
/// admissible point and `clamped` is set.
pub fn saep_cavity_update<T: Real>(
    state: &SolverState<T>,
    profile: &SpectralProfile<T>,
    alpha: T,
    v_x_prev: T,
) -> Result<ScalarCavities<T>> {
    let cx = mean_chi(&state.chi_x, "chi_x")?;
    let cz = mean(state.chi_z.as_slice());
    let mut z = -v_x_prev * cx / alpha;
    let mut clamped = false;
    if !z.is_finite() {
        return Err(Error::InvalidState(format!("S-transform argument {z}")));
    }
    if z > T::zero() {
        z = T::zero();
        clamped = true;
    }
    let lower = -nonzero_mass(profile, Side::GramNxN);
    if z <= lower {
        z = lower * (T::one() - T::lit(1e-9));
        clamped = true;
    }
    let s = s_transform(profile, Side::GramNxN, z)?;
    let v_z = (T::one() / cx - v_x_prev) * s;
    let v_x = alpha * (T::one() - v_z * cz) / cx;
    Ok(ScalarCavities { v_x, v_z, clamped })
}

/// Halvings of the site step before an EP update is declared unstable.
const MAX_BACKTRACKS: usize = 30;

/// Per-coordinate EP update of site and cavity precisions:
///
/// ```text
/// Λ_z ← 1/χ_z − ΛΛ_z
/// Λ_x ← 1/χ_x − ΛΛ_x
/// Σ_x = (Λ_x + HᵀΛ_zH)⁻¹
/// ΛΛ_z ← 1/diag(HΣ_xHᵀ) − Λ_z
/// ΛΛ_x ← 1/diag(Σ_x) − Λ_x
/// ```
///
/// The new sites are `old + s·(proposed − old)` with `s = 1 − site_damping`.
/// If the precision matrix is not positive definite or a cavity precision
/// comes out non-positive, `s` is halved and the update retried; at `s → 0`
/// the previous (valid) state is recovered, so this only fails on a state
/// that was already inconsistent. Returns warnings for backtracking and for
/// negative `Λ_z`.
pub fn ep_cavity_update<T: Real>(
    state: &mut SolverState<T>,
    h: &DMatrix<T>,
    site_damping: T,
) -> Result<Vec<String>> {
    let it = state.iteration;
    let one = T::one();
    let degenerate = |what: &str, i: usize| Error::Divergence {
        iteration: it,
        detail: format!("degenerate {what} at index {i}"),
    };
    if let Some(i) = state.chi_z.iter().position(|c| !(*c > T::zero())) {
        return Err(degenerate("chi_z", i));
    }
    if let Some(i) = state.chi_x.iter().position(|c| !(*c > T::zero())) {
        return Err(degenerate("chi_x", i));
    }
    let target_z = state.chi_z.map(|c| one / c) - &state.cavity_z;
    let target_x = state.chi_x.map(|c| one / c) - &state.cavity_x;
    let mut warnings = Vec::new();
    let mut step = one - site_damping;
    for attempt in 0..=MAX_BACKTRACKS {
        let site_z = &state.site_z + (&target_z - &state.site_z) * step;
        let site_x = &state.site_x + (&target_x - &state.site_x) * step;
        if let Some((cavity_x, cavity_z)) = ep_cavities(h, &site_x, &site_z) {
            if attempt > 0 {
                warnings.push(format!("iteration {it}: site step shortened to {step}"));
            }
            let negative = site_z.iter().filter(|v| **v < T::zero()).count();
            if negative > 0 {
                warnings.push(format!("iteration {it}: {negative} negative Lambda_z coordinates"));
            }
            state.site_z = site_z;
            state.cavity_z = cavity_z;
            state.site_x = site_x;
            state.cavity_x = cavity_x;
            return Ok(warnings);
        }
        step *= T::lit(0.5);
    }
    Err(Error::Instability {
        iteration: it,
        detail: "no admissible site update: Lambda_x + H^T Lambda_z H is not positive definite \
                 or a cavity precision is non-positive"
            .into(),
    })
}

/// Cavity precisions implied by the given sites, or `None` when the
/// precision matrix is not positive definite or a cavity is non-positive.
fn ep_cavities<T: Real>(
    h: &DMatrix<T>,
    site_x: &DVector<T>,
    site_z: &DVector<T>,
) -> Option<(DVector<T>, DVector<T>)> {
    let one = T::one();
    let mut precision = weighted_gram(h, site_z.as_slice());
    for (i, s) in site_x.iter().enumerate() {
        precision[(i, i)] += *s;
    }
    let factor = CholeskyFactor::new(precision)?;
    let (diag_sigma, diag_proj) = inverse_diagonals(&factor, h);
    let cavity_z = diag_proj.map(|d| one / d) - site_z;
    let cavity_x = diag_sigma.map(|d| one / d) - site_x;
    let admissible = |v: &DVector<T>| v.iter().all(|c| *c > T::zero() && c.is_finite());
    (admissible(&cavity_x) && admissible(&cavity_z)).then_some((cavity_x, cavity_z))
}
