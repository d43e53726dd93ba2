mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use saep::ensembles::SpectralProfile;
use saep::experiments::{aggregate_mse, sweep, ExperimentConfig};
use saep::freeprob::{r_transform, rs_duality_check, s_transform, Side};
use saep::scalar_models::{likelihood_tilted_moments, prior_tilted_moments, LikelihoodSpec, PriorSpec};
use saep::solvers::{mse_db, Algorithm, MseNormalization};

use common::{likelihood_moments_by_quadrature, moment_error, prior_moments_by_quadrature};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prior_moments_match_quadrature(
        w in 0.01f64..0.99,
        tau in 0.1f64..10.0,
        v in 0.01f64..100.0,
        t in -4.0f64..4.0,
    ) {
        let prior = PriorSpec::spike_slab(w, tau).unwrap();
        let rho = t * v.sqrt();
        let m = prior_tilted_moments(&prior, rho, v).unwrap();
        let err = moment_error((m.mean, m.variance), prior_moments_by_quadrature(&prior, rho, v));
        prop_assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn sign_moments_match_quadrature(v in 0.01f64..100.0, a in -6.0f64..6.0, positive in any::<bool>()) {
        let lik = LikelihoodSpec::sign_one_bit();
        let y = if positive { 1.0 } else { -1.0 };
        let rho = a * v.sqrt();
        let m = likelihood_tilted_moments(&lik, y, rho, v).unwrap();
        let err = moment_error((m.mean, m.variance), likelihood_moments_by_quadrature(&lik, y, rho, v));
        prop_assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn variance_stays_positive_far_in_the_tails(v in 1e-3f64..1e3, a in -30.0f64..30.0, w in 0.001f64..0.999) {
        let rho = a * v.sqrt();
        let m = likelihood_tilted_moments(&LikelihoodSpec::sign_one_bit(), 1.0, rho, v).unwrap();
        prop_assert!(m.variance > 0.0 && m.mean.is_finite());
        let m = prior_tilted_moments(&PriorSpec::spike_slab(w, 1.0).unwrap(), rho, v).unwrap();
        prop_assert!(m.variance > 0.0 && m.mean.is_finite());
    }

    #[test]
    fn sign_mean_increases_with_the_field(v in 0.05f64..20.0, a in -8.0f64..8.0, step in 1e-3f64..1.0) {
        let lik = LikelihoodSpec::sign_one_bit();
        let rho = a * v.sqrt();
        let lo = likelihood_tilted_moments(&lik, 1.0, rho, v).unwrap().mean;
        let hi = likelihood_tilted_moments(&lik, 1.0, rho + step, v).unwrap().mean;
        prop_assert!(hi > lo);
    }

    #[test]
    fn full_slab_is_the_gaussian_prior(tau in 0.1f64..10.0, v in 0.01f64..100.0, rho in -10.0f64..10.0) {
        let a = prior_tilted_moments(&PriorSpec::spike_slab(1.0, tau).unwrap(), rho, v).unwrap();
        let b = prior_tilted_moments(&PriorSpec::gaussian(tau).unwrap(), rho, v).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-14 * b.mean.abs().max(1.0));
        prop_assert!((a.variance - b.variance).abs() <= 1e-14 * b.variance);
    }

    #[test]
    fn marchenko_pastur_duality(alpha in 0.1f64..3.0, u in 0.02f64..0.95, k_side in any::<bool>()) {
        let p = SpectralProfile::marchenko_pastur(alpha).unwrap();
        let side = if k_side { Side::GramKxK } else { Side::GramNxN };
        let chi = saep::freeprob::chi(&p, side).min(3.0);
        let r = rs_duality_check(&p, side, -u * chi).unwrap();
        prop_assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn r_transform_is_increasing_on_the_negative_axis(alpha in 0.1f64..3.0, u in 0.02f64..0.9) {
        let p = SpectralProfile::marchenko_pastur(alpha).unwrap();
        let chi = saep::freeprob::chi(&p, Side::GramKxK).min(3.0);
        let a = r_transform(&p, Side::GramKxK, -u * chi).unwrap();
        let b = r_transform(&p, Side::GramKxK, -0.5 * u * chi).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn s_transform_of_projection_is_positive(alpha in 0.1f64..0.95, u in 0.01f64..0.99) {
        let p = SpectralProfile::projection(alpha).unwrap();
        let s = s_transform(&p, Side::GramKxK, -u * alpha).unwrap();
        prop_assert!(s > 0.0 && s.is_finite());
    }

    #[test]
    fn mse_is_scale_free_under_signal_energy(scale in 0.1f64..10.0, seed in 0u64..1000) {
        let x = DVector::from_fn(20, |i, _| ((i as u64 * 31 + seed) % 17) as f64 - 8.0);
        let e = DVector::from_fn(20, |i, _| ((i as u64 * 7 + seed) % 5) as f64 * 0.1);
        let a = mse_db(&(&x + &e), &x, MseNormalization::SignalEnergy);
        let b = mse_db(&((&x + &e) * scale), &(&x * scale), MseNormalization::SignalEnergy);
        prop_assert!((a - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn divergence_accounting_covers_every_trial(seed in any::<u64>(), trials in 1usize..4) {
        let mut c = ExperimentConfig::parse("K = 40\nalpha = 1/2\nalgorithms = ep, amp, saep\nmax_iters = 30").unwrap();
        c.trials = trials;
        c.base_seed = seed;
        let out = sweep(&c).unwrap();
        for alg in Algorithm::ALL {
            let a = aggregate_mse(&out.records, alg);
            prop_assert_eq!(a.included + a.excluded, trials);
        }
    }
}
