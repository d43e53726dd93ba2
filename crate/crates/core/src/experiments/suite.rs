//! Identity suite behind the `validate` subcommand: R/S duality on random
//! draws, the integral identities on reference and random profiles, and the
//! log-determinant characterization on random instances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{generate, singular_values, MatrixEnsemble, SpectralProfile};
use crate::error::Result;
use crate::freeprob::{chi, default_lemma_points, lemma_identity_checks, rs_duality_check, theorem1_validate, Side};

pub const DUALITY_THRESHOLD: f64 = 1e-8;
pub const LEMMA_THRESHOLD: f64 = 1e-7;
pub const THEOREM1_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl SuiteEntry {
    fn new(name: String, residual: f64, threshold: f64) -> Self {
        SuiteEntry {
            name,
            residual,
            threshold,
            passed: residual <= threshold,
        }
    }

    fn failed(name: String, error: impl std::fmt::Display) -> Self {
        SuiteEntry {
            name: format!("{name}: {error}"),
            residual: f64::NAN,
            threshold: 0.0,
            passed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub entries: Vec<SuiteEntry>,
    pub passed: bool,
}

fn random_empirical(rng: &mut ChaCha8Rng) -> Result<SpectralProfile<f64>> {
    let n = rng.gen_range(20..=80);
    let k = rng.gen_range(20..=80);
    let h: DMatrix<f64> = generate(&MatrixEnsemble::iid_gaussian(n, k, rng.gen()))?;
    singular_values(&h)
}

fn random_profile(rng: &mut ChaCha8Rng) -> Result<(String, SpectralProfile<f64>)> {
    Ok(match rng.gen_range(0..3) {
        0 => {
            let a = rng.gen_range(0.1..3.0);
            (format!("mp({a:.3})"), SpectralProfile::marchenko_pastur(a)?)
        }
        1 => {
            let a = rng.gen_range(0.1..0.95);
            (format!("projection({a:.3})"), SpectralProfile::projection(a)?)
        }
        _ => ("empirical".into(), random_empirical(rng)?),
    })
}

/// Runs `draws` duality checks, the integral identities on MP, projection
/// and ten random empirical profiles, and the log-determinant validator at
/// each size in `theorem_sizes` (iid ensemble with `α = 1/2`).
pub fn identity_suite(seed: u64, draws: usize, theorem_sizes: &[usize]) -> IdentitySuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();

    let mut worst = 0.0f64;
    let mut first_error = None;
    for i in 0..draws {
        let side = if rng.gen() { Side::GramKxK } else { Side::GramNxN };
        let result = random_profile(&mut rng).and_then(|(name, p)| {
            let c = chi(&p, side).min(3.0);
            let omega = -rng.gen_range(0.02..0.95) * c;
            rs_duality_check(&p, side, omega).map_err(|e| {
                crate::error::Error::invalid(format!("draw {i} ({name}, {side:?}, {omega}): {e}"))
            })
        });
        match result {
            Ok(r) => worst = worst.max(r),
            Err(e) => {
                first_error.get_or_insert(e.to_string());
            }
        }
    }
    match first_error {
        Some(e) => entries.push(SuiteEntry::failed(format!("duality over {draws} draws"), e)),
        None => entries.push(SuiteEntry::new(format!("duality over {draws} draws"), worst, DUALITY_THRESHOLD)),
    }

    let mut profiles: Vec<(String, Result<SpectralProfile<f64>>)> = vec![
        ("mp(1/3)".into(), SpectralProfile::marchenko_pastur(1.0 / 3.0)),
        ("mp(2)".into(), SpectralProfile::marchenko_pastur(2.0)),
        ("projection(1/2)".into(), SpectralProfile::projection(0.5)),
    ];
    for i in 0..10 {
        profiles.push((format!("empirical #{i}"), random_empirical(&mut rng)));
    }
    for (name, profile) in profiles {
        for side in [Side::GramKxK, Side::GramNxN] {
            let label = format!("lemmas {name} {side:?}");
            let res = profile.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                let (a, b) = default_lemma_points(p, side);
                lemma_identity_checks(p, side, a, b).map_err(|e| e.to_string())
            });
            match res {
                Ok(r) => entries.push(SuiteEntry::new(label, r.r_residual.max(r.s_residual), LEMMA_THRESHOLD)),
                Err(e) => entries.push(SuiteEntry::failed(label, e)),
            }
        }
    }

    for &k in theorem_sizes {
        let label = format!("log-determinant gap K={k}");
        match theorem1_gap(k, rng.gen()) {
            Ok(gap) => entries.push(SuiteEntry::new(label, gap, THEOREM1_THRESHOLD)),
            Err(e) => entries.push(SuiteEntry::failed(label, e)),
        }
    }

    let passed = entries.iter().all(|e| e.passed);
    IdentitySuiteReport { entries, passed }
}

/// `|lhs − rhs|/K` on an iid `K/2 × K` matrix with diagonals drawn from
/// `[0.5, 2]`.
pub fn theorem1_gap(k: usize, seed: u64) -> Result<f64> {
    let n = k / 2;
    let h: DMatrix<f64> = generate(&MatrixEnsemble::iid_gaussian(n, k, seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let lx = DVector::from_fn(k, |_, _| rng.gen_range(0.5..2.0));
    let lz = DVector::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
    Ok(theorem1_validate(&h, &lx, &lz)?.gap)
}
