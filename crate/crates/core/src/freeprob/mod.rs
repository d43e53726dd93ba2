//! Free-probability engine: transforms of spectral laws, the spectral
//! fixed point used by self-averaging EP, and numerical validators for the
//! log-determinant characterization and the transform integral identities.

mod fixed_point;
mod law;
mod lemmas;
pub mod quadrature;
mod roots;
mod theorem;
mod transforms;

use serde::{Deserialize, Serialize};

pub use fixed_point::{
    solve_spectral_fixed_point, spectral_susceptibilities, SpectralFixedPoint, FIXED_POINT_MAX_ITERS,
    FIXED_POINT_TOL, LAMBDA_MIN,
};
pub use lemmas::{default_lemma_points, lemma_identity_checks, LemmaResiduals};
pub use theorem::{theorem1_validate, Theorem1Report};
pub use transforms::{
    chi, nonzero_mass, r_transform, r_transform_numeric, r_transform_scaled, rs_duality_check,
    s_transform, s_transform_numeric, spectral_mean, stieltjes, TransformQuery,
};

/// Which Gram matrix a spectral law describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `HᵀH`, K×K.
    GramKxK,
    /// `HHᵀ`, N×N.
    GramNxN,
}
