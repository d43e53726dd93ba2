//! Safeguarded Newton iteration for monotone scalar equations.

use crate::error::{Error, Result};
use crate::real::Real;

pub(crate) const MAX_ITERS: usize = 200;
pub(crate) const TOL: f64 = 1e-12;

/// Root of a strictly decreasing `f` on `(lo, hi)` given `f(lo) ≥ 0 ≥ f(hi)`.
///
/// `f` returns the value and derivative and is never evaluated at the
/// endpoints, which may be singular. Newton steps that leave the current
/// bracket fall back to bisection.
pub(crate) fn solve_decreasing<T: Real, F: FnMut(T) -> (T, T)>(
    mut f: F,
    mut lo: T,
    mut hi: T,
    start: T,
    what: &str,
) -> Result<T> {
    let half = T::lit(0.5);
    let tol = T::lit(TOL);
    let eps = T::machine_epsilon();
    let mut x = if start > lo && start < hi {
        start
    } else {
        half * (lo + hi)
    };
    for _ in 0..MAX_ITERS {
        let (v, d) = f(x);
        if v == T::zero() {
            return Ok(x);
        }
        if v > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let is_newton = d < T::zero() && newton > lo && newton < hi;
        let next = if is_newton { newton } else { half * (lo + hi) };
        let step = (next - x).abs();
        let scale = T::one().max(x.abs());
        x = next;
        // a Newton step below tolerance leaves an error of order tol²
        if (is_newton && step <= tol * scale) || hi - lo <= T::lit(4.0) * eps * scale {
            return Ok(x);
        }
    }
    Err(Error::numerical(
        what.to_string(),
        format!("no convergence in {MAX_ITERS} iterations, bracket [{lo}, {hi}]"),
    ))
}
