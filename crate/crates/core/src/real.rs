//! Scalar abstraction shared by every numerical module.
//!
//! Everything is generic over [`Real`], which is nalgebra's `RealField`
//! (itself built on the `num-traits` hierarchy) plus the handful of special
//! functions the moment computations need. `f64` is the working precision;
//! `f32` is supported for the scalar kernels and transforms.

use nalgebra::RealField;

pub trait Real: RealField + Copy + Send + Sync {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Complementary error function.
    fn erfc(self) -> Self;

    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    fn machine_epsilon() -> Self;

    fn smallest_positive() -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn machine_epsilon() -> Self {
        f64::EPSILON
    }

    fn smallest_positive() -> Self {
        f64::MIN_POSITIVE
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    fn machine_epsilon() -> Self {
        f32::EPSILON
    }

    fn smallest_positive() -> Self {
        f32::MIN_POSITIVE
    }
}

/// Mean of a slice; zero for an empty slice.
pub(crate) fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().fold(T::zero(), |acc, &x| acc + x) / T::lit(xs.len() as f64)
}

/// Logistic sigmoid that never overflows.
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
