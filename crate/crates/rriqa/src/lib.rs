//! Reduced-reference image quality assessment built on an adaptive
//! Haar-type block transform and Bessel K Forms subband statistics.
//!
//! The pipeline: decompose reference and distorted images with the
//! tetromino-adaptive transform, fit a two-parameter Bessel K Forms
//! density to each detail subband, quantize the resulting 18 parameters
//! into a 144-bit reduced-reference payload, and score distortion with
//! five measures (parameter differences, geometric-mean deviations, and
//! an L² distance between the fitted densities). An evaluation harness
//! maps raw scores through a four-parameter logistic and reports Pearson
//! and Spearman correlations per dataset subset.
//!
//! Core math is generic over the scalar type (`f32` or `f64`) through
//! the [`Real`] trait; the `*64` aliases below cover the common case.

pub mod bkf;
pub mod cli;
pub mod eval;
pub mod features;
pub mod grid;
pub mod image;
pub mod metrics;
pub mod quad;
pub mod real;
pub mod special;
pub mod synth;
pub mod tetrolet;

pub use grid::Grid;
pub use real::Real;

/// Double-precision aliases for the common pipeline.
pub type BkfParams64 = bkf::BkfParams<f64>;
pub type GrayImage64 = image::GrayImage<f64>;
pub type Decomposition64 = tetrolet::TetroletDecomposition<f64>;
pub type FeatureVector64 = features::FeatureVector<f64>;
pub type LogisticParams64 = eval::LogisticParams<f64>;
