//! The reduced-reference feature codec.
//!
//! Sender side: three-level decomposition, per-subband density fit,
//! 9 × 2 = 18 parameters. Both parameter sets are quantized to 8 bits
//! in the log domain with fixed global ranges, so the transmitted
//! payload is exactly 18 bytes (144 bits); the on-disk container adds a
//! 6-byte header. Receiver side: dequantize and score against features
//! of the image at hand.

use thiserror::Error;

use crate::bkf::{estimate, sample_stats, BkfError, BkfParams};
use crate::image::{GrayImage, ImageError};
use crate::metrics::BandId;
use crate::real::Real;
use crate::tetrolet::{forward, TetroletError};

/// Decomposition depth of the feature pipeline.
pub const LEVELS: usize = 3;

/// Number of (band, parameters) entries: 3 levels × 3 details.
pub const BAND_COUNT: usize = 9;

/// Transmitted payload size: 9 shape codes then 9 scale codes.
pub const PAYLOAD_BYTES: usize = 2 * BAND_COUNT;

/// Shape floor applied by [`extract`]; keeps every downstream squared
/// density integrable (the L² guard sits at 1/4).
pub const ALPHA_FLOOR: f64 = 0.26;

/// Fixed log₁₀ quantizer range for the shape parameter.
pub const ALPHA_LOG10_RANGE: (f64, f64) = (-0.6, 3.0);

/// Fixed log₁₀ quantizer range for the scale parameter.
pub const BETA_LOG10_RANGE: (f64, f64) = (-4.0, 6.0);

const MAGIC: [u8; 4] = *b"TQRR";
const VERSION: u8 = 1;

/// Serialized container size: magic, version, level count, payload.
pub const CONTAINER_BYTES: usize = 4 + 1 + 1 + PAYLOAD_BYTES;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{0}")]
    Image(#[from] ImageError),
    #[error("{0}")]
    Transform(#[from] TetroletError),
    #[error("DegenerateSubband: level {level} detail {detail} has zero variance ({source})")]
    DegenerateSubband {
        level: u8,
        detail: u8,
        source: BkfError,
    },
    #[error("BadMagic: expected \"TQRR\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("UnsupportedVersion: {0} (this reader understands version 1)")]
    UnsupportedVersion(u8),
    #[error("MalformedPayload: {0}")]
    MalformedPayload(String),
}

/// Canonical band order: (level 1..=3) × (detail 1..=3), lexicographic.
pub fn band_order() -> impl Iterator<Item = BandId> {
    (1..=LEVELS as u8).flat_map(|level| (1..=3u8).map(move |detail| BandId { level, detail }))
}

/// The 18-parameter feature vector of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    entries: Vec<(BandId, BkfParams<T>)>,
    source_dims: Option<(usize, usize)>,
}

impl<T: Real> FeatureVector<T> {
    /// Entries in canonical band order.
    pub fn entries(&self) -> &[(BandId, BkfParams<T>)] {
        &self.entries
    }

    /// Image dimensions after cropping, when the vector came from an
    /// image rather than a decoded payload.
    pub fn source_dims(&self) -> Option<(usize, usize)> {
        self.source_dims
    }

    pub fn params(&self, band: BandId) -> Option<&BkfParams<T>> {
        self.entries
            .iter()
            .find(|(b, _)| *b == band)
            .map(|(_, p)| p)
    }
}

/// Runs the full sender pipeline: centered crop to a multiple of 16,
/// three-level decomposition, per-subband moment fit with the shape
/// floored at [`ALPHA_FLOOR`] (the scale is re-derived from the subband
/// variance so that `αβ` stays the subband variance).
pub fn extract<T: Real>(img: &GrayImage<T>) -> Result<FeatureVector<T>, FeatureError> {
    let cropped = img.crop_to_multiple(1 << (LEVELS + 1))?;
    let dec = forward(&cropped, LEVELS)?;
    let mut entries = Vec::with_capacity(BAND_COUNT);
    for band in band_order() {
        let sb = dec
            .subband(band.level as usize, band.detail as usize)
            .expect("band order is in range");
        let stats = sample_stats(sb.data()).map_err(|source| FeatureError::DegenerateSubband {
            level: band.level,
            detail: band.detail,
            source,
        })?;
        let fitted = estimate(&stats);
        let alpha = fitted.alpha().max(T::of(ALPHA_FLOOR));
        let beta = stats.variance() / alpha;
        let params = BkfParams::new(alpha, beta).expect("floored parameters are valid");
        entries.push((band, params));
    }
    Ok(FeatureVector {
        entries,
        source_dims: Some((cropped.width(), cropped.height())),
    })
}

/// The 144-bit quantized payload: 9 shape codes then 9 scale codes in
/// canonical band order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedFeatures {
    codes: [u8; PAYLOAD_BYTES],
}

fn quantize_log10(value: f64, (lo, hi): (f64, f64)) -> u8 {
    let logv = value.log10().clamp(lo, hi);
    ((logv - lo) / (hi - lo) * 255.0).round() as u8
}

fn dequantize_log10(code: u8, (lo, hi): (f64, f64)) -> f64 {
    10f64.powf(lo + (code as f64 / 255.0) * (hi - lo))
}

/// Quantizes a feature vector to the fixed 18-byte payload.
pub fn quantize<T: Real>(fv: &FeatureVector<T>) -> QuantizedFeatures {
    let mut codes = [0u8; PAYLOAD_BYTES];
    for (i, (_, p)) in fv.entries().iter().enumerate() {
        codes[i] = quantize_log10(p.alpha().dbl(), ALPHA_LOG10_RANGE);
        codes[BAND_COUNT + i] = quantize_log10(p.beta().dbl(), BETA_LOG10_RANGE);
    }
    QuantizedFeatures { codes }
}

/// Reconstructs parameter values at the quantizer grid points.
pub fn dequantize<T: Real>(qf: &QuantizedFeatures) -> FeatureVector<T> {
    let entries = band_order()
        .enumerate()
        .map(|(i, band)| {
            let alpha = dequantize_log10(qf.codes[i], ALPHA_LOG10_RANGE);
            let beta = dequantize_log10(qf.codes[BAND_COUNT + i], BETA_LOG10_RANGE);
            let params =
                BkfParams::new(T::of(alpha), T::of(beta)).expect("quantizer grid is in range");
            (band, params)
        })
        .collect();
    FeatureVector {
        entries,
        source_dims: None,
    }
}

impl QuantizedFeatures {
    pub fn from_codes(codes: [u8; PAYLOAD_BYTES]) -> Self {
        Self { codes }
    }

    /// Builds from a raw payload slice, rejecting wrong lengths.
    pub fn from_payload(payload: &[u8]) -> Result<Self, FeatureError> {
        let codes: [u8; PAYLOAD_BYTES] = payload.try_into().map_err(|_| {
            FeatureError::MalformedPayload(format!(
                "payload is {} bytes, expected {PAYLOAD_BYTES}",
                payload.len()
            ))
        })?;
        Ok(Self { codes })
    }

    /// The transmitted 18-byte payload.
    pub fn payload(&self) -> &[u8; PAYLOAD_BYTES] {
        &self.codes
    }

    /// Serializes to the 24-byte container: magic `TQRR`, version, level
    /// count, payload.
    pub fn serialize(&self) -> [u8; CONTAINER_BYTES] {
        let mut out = [0u8; CONTAINER_BYTES];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = LEVELS as u8;
        out[6..].copy_from_slice(&self.codes);
        out
    }

    /// Parses the 24-byte container, validating magic and version.
    pub fn deserialize(bytes: &[u8]) -> Result<Self, FeatureError> {
        if bytes.len() < 6 {
            return Err(FeatureError::MalformedPayload(format!(
                "container is {} bytes, expected {CONTAINER_BYTES}",
                bytes.len()
            )));
        }
        let found: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if found != MAGIC {
            return Err(FeatureError::BadMagic { found });
        }
        if bytes[4] != VERSION {
            return Err(FeatureError::UnsupportedVersion(bytes[4]));
        }
        if bytes[5] as usize != LEVELS {
            return Err(FeatureError::MalformedPayload(format!(
                "level count {} unsupported (expected {LEVELS})",
                bytes[5]
            )));
        }
        if bytes.len() != CONTAINER_BYTES {
            return Err(FeatureError::MalformedPayload(format!(
                "container is {} bytes, expected {CONTAINER_BYTES}",
                bytes.len()
            )));
        }
        Self::from_payload(&bytes[6..])
    }
}

/// Pairs up reference and distorted feature vectors band by band.
pub fn band_pairs<T: Real>(
    reference: &FeatureVector<T>,
    distorted: &FeatureVector<T>,
) -> Vec<crate::metrics::BandPair<T>> {
    reference
        .entries()
        .iter()
        .zip(distorted.entries())
        .map(
            |(&(band, reference), &(_, distorted))| crate::metrics::BandPair {
                band,
                reference,
                distorted,
            },
        )
        .collect()
}
