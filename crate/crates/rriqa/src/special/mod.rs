//! Special-function kernels: log-gamma, modified Bessel K of fractional
//! order, and the Gauss hypergeometric function.
//!
//! Kernels compute in `f64` regardless of the pipeline scalar type.

mod bessel;
mod gamma;
mod hyp2f1;

pub use bessel::{bessel_k, ln_bessel_k};
pub use gamma::{gamma, ln_gamma, ln_gamma_signed};
pub use hyp2f1::hyp2f1;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("DomainError: {0}")]
    DomainError(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
}
