//! Expectation propagation (EP), approximate message passing (AMP) and
//! self-averaging EP (SAEP) for generalized linear models `y ~ p(y | Hx)`,
//! `x ~ p(x)`, together with the free-probability engine that lets SAEP
//! replace EP's per-iteration matrix inversions by scalar spectral updates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod ensembles;
pub mod experiments;
pub mod error;
pub mod freeprob;
mod fsutil;
pub mod real;
pub mod scalar_models;
pub mod solvers;
pub mod stability;

pub use error::{Error, Result};
pub use fsutil::atomic_write;
pub use real::Real;
