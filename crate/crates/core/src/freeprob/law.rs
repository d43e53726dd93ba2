//! One side of a spectral profile viewed as a probability law on `[0, ∞)`.

use super::quadrature::integrate;
use super::Side;
use crate::ensembles::SpectralProfile;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug)]
enum Kind<'a, T> {
    /// Marchenko–Pastur law of `HᵀH` (K×K side), ratio α.
    MpK(T),
    /// Marchenko–Pastur law of `HHᵀ` (N×N side), ratio α.
    MpN(T),
    /// `(1 − α) δ₀ + α δ₁`.
    ProjK(T),
    /// `δ_c`.
    Point(T),
    /// Squared singular values padded with zeros up to `dim`.
    Discrete { sv: &'a [T], dim: usize },
}

/// Eigenvalue law of one Gram side, optionally rescaled by `scale`
/// (the law of `scale · x`).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Law<'a, T> {
    kind: Kind<'a, T>,
    scale: T,
}

impl<'a, T: Real> Law<'a, T> {
    pub fn new(profile: &'a SpectralProfile<T>, side: Side) -> Self {
        Self::scaled(profile, side, T::one())
    }

    pub fn scaled(profile: &'a SpectralProfile<T>, side: Side, scale: T) -> Self {
        let kind = match (profile, side) {
            (SpectralProfile::MarchenkoPastur { alpha }, Side::GramKxK) => Kind::MpK(*alpha),
            (SpectralProfile::MarchenkoPastur { alpha }, Side::GramNxN) => Kind::MpN(*alpha),
            (SpectralProfile::Projection { alpha }, Side::GramKxK) if *alpha < T::one() => {
                Kind::ProjK(*alpha)
            }
            (SpectralProfile::Projection { .. }, _) => Kind::Point(T::one()),
            (
                SpectralProfile::Empirical {
                    singular_values,
                    n_rows,
                    n_cols,
                },
                side,
            ) => Kind::Discrete {
                sv: singular_values,
                dim: match side {
                    Side::GramKxK => *n_cols,
                    Side::GramNxN => *n_rows,
                },
            },
        };
        Law { kind, scale }
    }

    fn dim_f(dim: usize) -> T {
        T::lit(dim as f64)
    }

    /// `∫ x dF`.
    pub fn mean(&self) -> T {
        let m = match self.kind {
            Kind::MpK(a) => a,
            Kind::MpN(_) => T::one(),
            Kind::ProjK(a) => a,
            Kind::Point(c) => c,
            Kind::Discrete { sv, dim } => {
                sv.iter().fold(T::zero(), |acc, s| acc + *s * *s) / Self::dim_f(dim)
            }
        };
        m * self.scale
    }

    /// Right end of the support.
    pub fn support_max(&self) -> T {
        let m = match self.kind {
            Kind::MpK(a) | Kind::MpN(a) => (T::one() + a.sqrt()).powi(2),
            Kind::ProjK(_) => T::one(),
            Kind::Point(c) => c,
            Kind::Discrete { sv, .. } => sv.first().map(|s| *s * *s).unwrap_or(T::zero()),
        };
        m * self.scale
    }

    /// Mass of the atom at zero, `F(0)`.
    pub fn zero_mass(&self) -> T {
        let one = T::one();
        match self.kind {
            Kind::MpK(a) => (one - a).max(T::zero()),
            Kind::MpN(a) => (one - one / a).max(T::zero()),
            Kind::ProjK(a) => one - a,
            Kind::Point(c) => {
                if c == T::zero() {
                    one
                } else {
                    T::zero()
                }
            }
            Kind::Discrete { sv, dim } => {
                let nonzero = sv.iter().filter(|s| **s * **s > T::zero()).count();
                T::lit((dim - nonzero) as f64) / Self::dim_f(dim)
            }
        }
    }

    /// `α′ = 1 − F(0)`, the domain length of the S-transform.
    pub fn nonzero_mass(&self) -> T {
        T::one() - self.zero_mass()
    }

    /// `χ = ∫ x⁻¹ dF`, infinite when there is mass at (or accumulating at) zero.
    pub fn chi(&self) -> T {
        if self.zero_mass() > T::zero() {
            return T::infinity();
        }
        let one = T::one();
        let c = match self.kind {
            Kind::MpK(a) if a > one => one / (a - one),
            Kind::MpN(a) if a < one => one / (one - a),
            Kind::MpK(_) | Kind::MpN(_) => T::infinity(),
            Kind::ProjK(_) => one,
            Kind::Point(c) => one / c,
            Kind::Discrete { sv, dim } => {
                // no zero eigenvalues here, so dim == sv.len()
                sv.iter().fold(T::zero(), |acc, s| acc + one / (*s * *s)) / Self::dim_f(dim)
            }
        };
        c / self.scale
    }

    /// Stieltjes transform `G(s) = ∫ dF/(s − x)` and its derivative, `s < 0`.
    pub fn stieltjes(&self, s: T) -> (T, T) {
        let c = self.scale;
        let (g, dg) = self.stieltjes_unit(s / c);
        (g / c, dg / (c * c))
    }

    fn stieltjes_unit(&self, s: T) -> (T, T) {
        let one = T::one();
        match self.kind {
            Kind::MpK(a) => mp_k_stieltjes(a, s),
            Kind::MpN(a) => {
                let (gk, dgk) = mp_k_stieltjes(a, s);
                let inv = one / s;
                (inv + (gk - inv) / a, -inv * inv + (dgk + inv * inv) / a)
            }
            Kind::ProjK(a) => {
                let w = one - a;
                (
                    w / s + a / (s - one),
                    -w / (s * s) - a / ((s - one) * (s - one)),
                )
            }
            Kind::Point(c) => {
                let d = one / (s - c);
                (d, -d * d)
            }
            Kind::Discrete { sv, dim } => {
                let zeros = T::lit((dim - sv.len()) as f64);
                let (mut g, mut dg) = (zeros / s, -zeros / (s * s));
                for x in sv {
                    let d = one / (s - *x * *x);
                    g += d;
                    dg -= d * d;
                }
                (g / Self::dim_f(dim), dg / Self::dim_f(dim))
            }
        }
    }

    /// For `t > 0`: `(∫ x/(t+x) dF, ∫ x/(t+x)² dF)`.
    pub fn psi_pair(&self, t: T) -> (T, T) {
        match self.kind {
            Kind::Discrete { sv, dim } => {
                let (mut p, mut dp) = (T::zero(), T::zero());
                for s in sv {
                    let x = self.scale * *s * *s;
                    let d = T::one() / (t + x);
                    p += x * d;
                    dp += x * d * d;
                }
                (p / Self::dim_f(dim), dp / Self::dim_f(dim))
            }
            _ => {
                // ∫ x/(t+x) = 1 + t G(−t);  ∫ x/(t+x)² = −G(−t) + t G′(−t)
                let (g, dg) = self.stieltjes(-t);
                (T::one() + t * g, -g + t * dg)
            }
        }
    }

    /// `(∫ dF/(a + b x), ∫ x dF/(a + b x))` together with the derivatives
    /// `(−∫ dF/(a+bx)², −∫ x² dF/(a+bx)²)`, for `a > 0`, `b ≥ 0`.
    pub fn resolvent(&self, a: T, b: T) -> [T; 4] {
        let one = T::one();
        match self.kind {
            Kind::Discrete { sv, dim } => {
                let zeros = T::lit((dim - sv.len()) as f64);
                let inv_a = one / a;
                let mut r = [zeros * inv_a, T::zero(), -zeros * inv_a * inv_a, T::zero()];
                for s in sv {
                    let x = self.scale * *s * *s;
                    let d = one / (a + b * x);
                    r[0] += d;
                    r[1] += x * d;
                    r[2] -= d * d;
                    r[3] -= x * x * d * d;
                }
                r.map(|v| v / Self::dim_f(dim))
            }
            _ if b == T::zero() => {
                let m = self.mean();
                [one / a, m / a, -one / (a * a), -self.second_moment() / (a * a)]
            }
            _ => {
                let t = a / b;
                let (g, dg) = self.stieltjes(-t);
                let (p, dp) = self.psi_pair(t);
                let b2 = b * b;
                // x²/(t+x)² = x/(t+x) − t x/(t+x)²
                [-g / b, p / b, dg / b2, -(p - t * dp) / b2]
            }
        }
    }

    /// `∫ x² dF`.
    fn second_moment(&self) -> T {
        let one = T::one();
        let m2 = match self.kind {
            Kind::MpK(a) => a * (one + a),
            Kind::MpN(a) => one + a,
            Kind::ProjK(a) => a,
            Kind::Point(c) => c * c,
            Kind::Discrete { sv, dim } => {
                sv.iter().fold(T::zero(), |acc, s| acc + (*s * *s).powi(2)) / Self::dim_f(dim)
            }
        };
        m2 * self.scale * self.scale
    }

    /// `∫ g(x) dF(x)` for a function that is smooth on the support; atoms at
    /// zero contribute `g(0)` with their mass.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut g: F) -> Result<T> {
        let one = T::one();
        let c = self.scale;
        match self.kind {
            Kind::Point(x) => Ok(g(c * x)),
            Kind::ProjK(a) => Ok((one - a) * g(T::zero()) + a * g(c)),
            Kind::Discrete { sv, dim } => {
                let zeros = T::lit((dim - sv.len()) as f64);
                let mut acc = if zeros > T::zero() { zeros * g(T::zero()) } else { T::zero() };
                for s in sv {
                    acc += g(c * *s * *s);
                }
                Ok(acc / Self::dim_f(dim))
            }
            Kind::MpK(a) | Kind::MpN(a) => {
                let continuous = mp_continuous_integral(a, |x| g(c * x))?;
                let (weight, atom) = match self.kind {
                    Kind::MpK(_) => (one, (one - a).max(T::zero())),
                    _ => (one / a, (one - one / a).max(T::zero())),
                };
                let atom_part = if atom > T::zero() { atom * g(T::zero()) } else { T::zero() };
                Ok(weight * continuous + atom_part)
            }
        }
    }
}

/// MP Stieltjes transform of the K×K side and its derivative: the negative
/// root of `s G² + (α − 1 − s) G + 1 = 0`, evaluated without cancellation.
fn mp_k_stieltjes<T: Real>(alpha: T, s: T) -> (T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    let b = s + one - alpha;
    let disc = (b * b - T::lit(4.0) * s).sqrt();
    let g = if b >= T::zero() {
        (b + disc) / (two * s)
    } else {
        two / (b - disc)
    };
    let dg = (g - g * g) / (two * s * g + alpha - one - s);
    (g, dg)
}

/// `∫ g(x) ρ(x) dx` over the continuous part of the K-side MP law, with
/// `ρ(x) = √((x₊ − x)(x − x₋)) / (2π x)`. The substitution
/// `x = center + radius·sin θ` removes the square-root edge behaviour.
fn mp_continuous_integral<T: Real, F: FnMut(T) -> T>(alpha: T, mut g: F) -> Result<T> {
    let center = T::one() + alpha;
    let radius = T::lit(2.0) * alpha.sqrt();
    let half_pi = T::frac_pi_2();
    let norm = radius * radius / T::two_pi();
    integrate(
        |theta: T| {
            let x = center + radius * theta.sin();
            let cos = theta.cos();
            let v = g(x) * norm * cos * cos / x;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::numerical("spectral integral", "non-finite integrand"))
            }
        },
        -half_pi,
        half_pi,
        T::lit(1e-14),
        T::lit(1e-13),
    )
}
