//! Measurement-matrix ensembles and their singular-value spectra.

mod io;

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freeprob::Side;
use crate::real::Real;

pub use io::{read_matrix, read_profile, write_matrix, write_profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleKind {
    /// iid `N(0, 1/K)` entries.
    IidGaussian,
    /// First N rows of a randomly permuted orthonormal DCT-II matrix.
    RowOrthogonalDct,
    /// Matrix read from a text file.
    FromFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEnsemble {
    pub kind: EnsembleKind,
    pub n_rows: usize,
    pub n_cols: usize,
    pub seed: u64,
    pub path: Option<PathBuf>,
}

impl MatrixEnsemble {
    pub fn iid_gaussian(n_rows: usize, n_cols: usize, seed: u64) -> Self {
        MatrixEnsemble {
            kind: EnsembleKind::IidGaussian,
            n_rows,
            n_cols,
            seed,
            path: None,
        }
    }

    pub fn row_orthogonal_dct(n_rows: usize, n_cols: usize, seed: u64) -> Self {
        MatrixEnsemble {
            kind: EnsembleKind::RowOrthogonalDct,
            n_rows,
            n_cols,
            seed,
            path: None,
        }
    }

    pub fn from_file(path: impl Into<PathBuf>, n_rows: usize, n_cols: usize) -> Self {
        MatrixEnsemble {
            kind: EnsembleKind::FromFile,
            n_rows,
            n_cols,
            seed: 0,
            path: Some(path.into()),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.n_rows as f64 / self.n_cols as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::invalid("ensemble dimensions must be positive"));
        }
        match self.kind {
            EnsembleKind::RowOrthogonalDct if self.n_rows > self.n_cols => {
                Err(Error::invalid(format!(
                    "row-orthogonal ensemble needs N <= K, got N = {}, K = {}",
                    self.n_rows, self.n_cols
                )))
            }
            EnsembleKind::FromFile if self.path.is_none() => {
                Err(Error::invalid("file ensemble without a path"))
            }
            _ => Ok(()),
        }
    }
}

/// Spectral description of a measurement matrix `H` (N×K).
///
/// Analytic variants describe the limiting laws of the two built-in
/// ensembles; the empirical variant carries the singular values of one
/// realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpectralProfile<T> {
    /// Limiting spectrum of an iid matrix with entry variance 1/K.
    MarchenkoPastur { alpha: T },
    /// Row-orthogonal matrix: `HHᵀ = I`, `HᵀH` a rank-N projection.
    Projection { alpha: T },
    /// Singular values of a realization, sorted descending, length min(N, K).
    Empirical {
        singular_values: Vec<T>,
        n_rows: usize,
        n_cols: usize,
    },
}

impl<T: Real> SpectralProfile<T> {
    pub fn marchenko_pastur(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(SpectralProfile::MarchenkoPastur { alpha })
    }

    pub fn projection(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::invalid(format!(
                "projection profile needs alpha in (0, 1], got {alpha}"
            )));
        }
        Ok(SpectralProfile::Projection { alpha })
    }

    /// Builds an empirical profile; values are sorted descending.
    pub fn empirical(mut singular_values: Vec<T>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("empirical profile dimensions must be positive"));
        }
        if singular_values.len() != n_rows.min(n_cols) {
            return Err(Error::invalid(format!(
                "expected {} singular values, got {}",
                n_rows.min(n_cols),
                singular_values.len()
            )));
        }
        if let Some(bad) = singular_values
            .iter()
            .find(|s| !(s.is_finite() && **s >= T::zero()))
        {
            return Err(Error::invalid(format!("invalid singular value {bad}")));
        }
        singular_values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        Ok(SpectralProfile::Empirical {
            singular_values,
            n_rows,
            n_cols,
        })
    }

    /// Ratio α = N/K.
    pub fn alpha(&self) -> T {
        match self {
            SpectralProfile::MarchenkoPastur { alpha } | SpectralProfile::Projection { alpha } => {
                *alpha
            }
            SpectralProfile::Empirical { n_rows, n_cols, .. } => {
                T::lit(*n_rows as f64) / T::lit(*n_cols as f64)
            }
        }
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self, SpectralProfile::Empirical { .. })
    }

    /// Eigenvalues of the requested Gram matrix for an empirical profile:
    /// squared singular values padded with zeros up to the side's dimension.
    pub fn eigenvalues(&self, side: Side) -> Option<Vec<T>> {
        match self {
            SpectralProfile::Empirical {
                singular_values,
                n_rows,
                n_cols,
            } => {
                let dim = match side {
                    Side::GramKxK => *n_cols,
                    Side::GramNxN => *n_rows,
                };
                let mut ev: Vec<T> = singular_values.iter().map(|s| *s * *s).collect();
                ev.resize(dim, T::zero());
                Some(ev)
            }
            _ => None,
        }
    }
}

/// Draws a matrix from the ensemble. Identical ensembles give bit-identical
/// matrices.
pub fn generate<T: Real>(ensemble: &MatrixEnsemble) -> Result<DMatrix<T>> {
    ensemble.validate()?;
    let (n, k) = (ensemble.n_rows, ensemble.n_cols);
    match ensemble.kind {
        EnsembleKind::IidGaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed);
            let normal = Normal::new(0.0, (1.0 / k as f64).sqrt()).expect("valid normal");
            let entries: Vec<f64> = (0..n * k).map(|_| normal.sample(&mut rng)).collect();
            Ok(DMatrix::from_row_iterator(
                n,
                k,
                entries.into_iter().map(T::lit),
            ))
        }
        EnsembleKind::RowOrthogonalDct => {
            let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed);
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            Ok(DMatrix::from_fn(n, k, |i, j| {
                T::lit(dct_entry(perm[i], perm[j], k))
            }))
        }
        EnsembleKind::FromFile => {
            let path = ensemble.path.as_ref().expect("validated");
            let h: DMatrix<T> = read_matrix(path)?;
            if h.nrows() != n || h.ncols() != k {
                return Err(Error::invalid(format!(
                    "{}: matrix is {}x{}, ensemble expects {n}x{k}",
                    path.display(),
                    h.nrows(),
                    h.ncols()
                )));
            }
            Ok(h)
        }
    }
}

/// Entry `(row, col)` of the orthonormal K×K DCT-II matrix.
pub fn dct_entry(row: usize, col: usize, k: usize) -> f64 {
    let scale = if row == 0 {
        (1.0 / k as f64).sqrt()
    } else {
        (2.0 / k as f64).sqrt()
    };
    // reduce the phase exactly in integers: cos(π m / 2K) has period 4K in m
    let m = ((2 * col + 1) * row) % (4 * k);
    scale * (std::f64::consts::PI * m as f64 / (2 * k) as f64).cos()
}

/// Descending singular values of `h` as an empirical profile.
pub fn singular_values<T: Real>(h: &DMatrix<T>) -> Result<SpectralProfile<T>> {
    let (n, k) = h.shape();
    if n == 0 || k == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let check = cfg!(debug_assertions);
    let svd = nalgebra::linalg::SVD::try_new(h.clone(), check, check, T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::numerical("singular value decomposition", format!("no convergence for {n}x{k} matrix")))?;
    if check {
        let recomposed = svd
            .clone()
            .recompose()
            .map_err(|e| Error::numerical("singular value decomposition", e))?;
        let scale = h.norm();
        if scale > T::zero() {
            let rel = (recomposed - h).norm() / scale;
            if rel > T::lit(1e-8) {
                return Err(Error::numerical(
                    "singular value decomposition",
                    format!("reconstruction error {rel} for {n}x{k} matrix"),
                ));
            }
        }
    }
    SpectralProfile::empirical(svd.singular_values.iter().copied().collect(), n, k)
}

/// Limiting spectral profile of a built-in ensemble.
pub fn analytic_profile<T: Real>(ensemble: &MatrixEnsemble) -> Result<SpectralProfile<T>> {
    let alpha = T::lit(ensemble.alpha());
    match ensemble.kind {
        EnsembleKind::IidGaussian => SpectralProfile::marchenko_pastur(alpha),
        EnsembleKind::RowOrthogonalDct => SpectralProfile::projection(alpha),
        EnsembleKind::FromFile => Err(Error::NoAnalyticProfile(
            ensemble
                .path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "file ensemble".into()),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_dct_is_orthogonal() {
        let h: DMatrix<f64> = generate(&MatrixEnsemble::row_orthogonal_dct(64, 64, 5)).unwrap();
        let eye = DMatrix::<f64>::identity(64, 64);
        assert!((&h * h.transpose() - &eye).amax() <= 1e-10);
        assert!((h.transpose() * &h - &eye).amax() <= 1e-10);
    }

    #[test]
    fn dct_rows_are_orthonormal() {
        for &(n, k) in &[(10usize, 30usize), (100, 300), (150, 300)] {
            let h: DMatrix<f64> = generate(&MatrixEnsemble::row_orthogonal_dct(n, k, 9)).unwrap();
            let g = &h * h.transpose();
            assert!((g - DMatrix::<f64>::identity(n, n)).amax() <= 1e-10);
        }
    }

    #[test]
    fn dct_requires_wide_matrix() {
        let e = MatrixEnsemble::row_orthogonal_dct(5, 4, 0);
        assert!(matches!(generate::<f64>(&e), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let e = MatrixEnsemble::iid_gaussian(7, 11, 42);
        let a: DMatrix<f64> = generate(&e).unwrap();
        let b: DMatrix<f64> = generate(&e).unwrap();
        assert_eq!(a, b);
        let c: DMatrix<f64> = generate(&MatrixEnsemble::iid_gaussian(7, 11, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn identity_singular_values() {
        let p = singular_values(&DMatrix::<f64>::identity(3, 3)).unwrap();
        match p {
            SpectralProfile::Empirical { singular_values, .. } => {
                assert_eq!(singular_values.len(), 3);
                for s in singular_values {
                    assert!((s - 1.0).abs() < 1e-14);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn analytic_profiles() {
        let p: SpectralProfile<f64> =
            analytic_profile(&MatrixEnsemble::iid_gaussian(400, 1200, 0)).unwrap();
        assert_eq!(p, SpectralProfile::MarchenkoPastur { alpha: 400.0 / 1200.0 });
        let q: SpectralProfile<f64> =
            analytic_profile(&MatrixEnsemble::row_orthogonal_dct(600, 1200, 0)).unwrap();
        assert_eq!(q, SpectralProfile::Projection { alpha: 0.5 });
        let e = MatrixEnsemble::from_file("h.txt", 2, 2);
        assert!(matches!(
            analytic_profile::<f64>(&e),
            Err(Error::NoAnalyticProfile(_))
        ));
    }

    #[test]
    fn eigenvalue_padding() {
        let p = SpectralProfile::empirical(vec![1.0, 2.0], 2, 5).unwrap();
        assert_eq!(p.eigenvalues(Side::GramNxN).unwrap(), vec![4.0, 1.0]);
        assert_eq!(
            p.eigenvalues(Side::GramKxK).unwrap(),
            vec![4.0, 1.0, 0.0, 0.0, 0.0]
        );
        assert!(SpectralProfile::empirical(vec![1.0], 2, 5).is_err());
        assert!(SpectralProfile::empirical(vec![1.0, f64::NAN], 2, 5).is_err());
    }
}
