//! Oracles shared by the integration tests.

#![allow(dead_code)]

use saep::freeprob::quadrature::integrate;
use saep::scalar_models::{LikelihoodFamily, LikelihoodSpec, PriorFamily, PriorSpec};

const QUAD_ABS: f64 = 1e-300;
const QUAD_REL: f64 = 1e-13;
/// Half-width of the integration window in standard deviations.
const WINDOW: f64 = 14.0;

/// Mean and variance of an unnormalized density `g` on `[a, b]` plus an
/// extra atom of weight `atom` at zero, in two passes so the variance is
/// not formed by cancellation.
fn moments(g: impl Fn(f64) -> f64, a: f64, b: f64, atom: f64) -> (f64, f64) {
    let q = |f: &dyn Fn(f64) -> f64| integrate(|x| Ok(f(x)), a, b, QUAD_ABS, QUAD_REL).unwrap();
    let z = q(&|x| g(x)) + atom;
    let mean = q(&|x| x * g(x)) / z;
    let var = (q(&|x| (x - mean) * (x - mean) * g(x)) + atom * mean * mean) / z;
    (mean, var)
}

/// Quadrature moments of `q(x) ∝ p(x) exp(-v x²/2 + ρ x)`.
pub fn prior_moments_by_quadrature(prior: &PriorSpec<f64>, rho: f64, v: f64) -> (f64, f64) {
    let precision = v + 1.0 / prior.tau;
    let mu = rho / precision;
    let sd = precision.sqrt().recip();
    // the slab density times the Gaussian factor, rescaled by its peak value
    // so that nothing overflows; the atom carries the inverse of that scale
    let log_peak = 0.5 * rho * mu;
    let slab = |x: f64| {
        (2.0 * std::f64::consts::PI * prior.tau).sqrt().recip()
            * (-0.5 * precision * (x - mu) * (x - mu)).exp()
    };
    let w = match prior.family {
        PriorFamily::Gaussian => 1.0,
        _ => prior.rho,
    };
    let atom = (1.0 - w) * (-log_peak).exp();
    moments(|x| w * slab(x), mu - WINDOW * sd, mu + WINDOW * sd, atom)
}

/// Quadrature moments of `q(z) ∝ p(y|z) exp(-v z²/2 + ρ z)`.
pub fn likelihood_moments_by_quadrature(lik: &LikelihoodSpec<f64>, y: f64, rho: f64, v: f64) -> (f64, f64) {
    match lik.family {
        LikelihoodFamily::SignOneBit => {
            let mu = rho / v;
            let sd = v.sqrt().recip();
            let g = |z: f64| (-0.5 * v * (z - mu) * (z - mu)).exp();
            // integrate over the kept half-line
            let (lo, hi) = if y > 0.0 {
                ((mu - WINDOW * sd).max(0.0), mu.max(0.0) + WINDOW * sd)
            } else {
                (mu.min(0.0) - WINDOW * sd, (mu + WINDOW * sd).min(0.0))
            };
            moments(g, lo, hi, 0.0)
        }
        LikelihoodFamily::GaussianNoise => {
            let s2 = lik.noise_var.unwrap();
            let precision = v + 1.0 / s2;
            let mu = (rho + y / s2) / precision;
            let sd = precision.sqrt().recip();
            let g = |z: f64| (-0.5 * precision * (z - mu) * (z - mu)).exp();
            moments(g, mu - WINDOW * sd, mu + WINDOW * sd, 0.0)
        }
    }
}

/// Error of a `(mean, variance)` pair against the oracle: the mean is
/// measured on the scale `max(|mean|, sd)`, the variance relatively.
pub fn moment_error(got: (f64, f64), oracle: (f64, f64)) -> f64 {
    let scale = oracle.0.abs().max(oracle.1.sqrt());
    let em = (got.0 - oracle.0).abs() / scale;
    let ev = (got.1 - oracle.1).abs() / oracle.1;
    em.max(ev)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
