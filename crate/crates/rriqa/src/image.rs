//! Grayscale images: PGM input/output, geometry normalization, and the
//! synthetic distortions (Gaussian blur, additive white noise) used by
//! the desk-scale experiments.
//!
//! Samples are stored as real values in the nominal range `[0, 255]`;
//! nothing in the pipeline truncates back to 8 bits mid-flight.

use std::fs;
use std::io;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::grid::Grid;
use crate::real::Real;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("Io: {0}")]
    Io(#[from] io::Error),
    #[error("UnsupportedFormat: {0}")]
    UnsupportedFormat(String),
    #[error("CorruptFile: {0}")]
    CorruptFile(String),
    #[error("EmptyImage: zero width or height")]
    EmptyImage,
    #[error("SampleCountMismatch: expected {expected} samples, got {got}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("ImageTooSmall: {width}x{height} cannot be cropped to a multiple of {multiple}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        multiple: usize,
    },
    #[error("InvalidSigma: {0} (must be finite and positive)")]
    InvalidSigma(f64),
}

/// A grayscale image with real-valued samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    data: Grid<T>,
}

impl<T: Real> GrayImage<T> {
    /// Builds an image from row-major samples.
    pub fn from_samples(width: usize, height: usize, samples: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        if samples.len() != width * height {
            return Err(ImageError::SampleCountMismatch {
                expected: width * height,
                got: samples.len(),
            });
        }
        let data = Grid::from_vec(height, width, samples).expect("length checked");
        Ok(Self { data })
    }

    pub fn width(&self) -> usize {
        self.data.cols()
    }

    pub fn height(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data.get(row, col)
    }

    /// Row-major samples.
    pub fn samples(&self) -> &[T] {
        self.data.data()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.data
    }

    pub fn from_grid(grid: Grid<T>) -> Result<Self, ImageError> {
        if grid.rows() == 0 || grid.cols() == 0 {
            return Err(ImageError::EmptyImage);
        }
        Ok(Self { data: grid })
    }

    /// Mean sample value.
    pub fn mean(&self) -> T {
        let n = T::of(self.samples().len() as f64);
        self.samples().iter().copied().sum::<T>() / n
    }

    /// Loads a PGM file (binary `P5` or ASCII `P2`). 16-bit sources are
    /// rescaled so that `maxval` maps to 255.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let bytes = fs::read(path)?;
        Self::decode_pgm(&bytes)
    }

    /// Decodes a PGM byte stream.
    pub fn decode_pgm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut cursor = PgmCursor::new(bytes);
        let magic = cursor.magic()?;
        let binary = match magic.as_str() {
            "P5" => true,
            "P2" => false,
            other => {
                return Err(ImageError::UnsupportedFormat(format!(
                    "magic {other:?} is not PGM (P2/P5)"
                )))
            }
        };
        let width = cursor.header_int("width")?;
        let height = cursor.header_int("height")?;
        let maxval = cursor.header_int("maxval")?;
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage);
        }
        // Refuse implausible headers before allocating for them.
        if width.checked_mul(height).is_none_or(|n| n > 1 << 28) {
            return Err(ImageError::CorruptFile(format!(
                "implausible dimensions {width}x{height}"
            )));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(ImageError::CorruptFile(format!(
                "maxval {maxval} outside 1..=65535"
            )));
        }
        let count = width * height;
        let scale = 255.0 / maxval as f64;
        let mut samples = Vec::with_capacity(count);
        if binary {
            cursor.single_whitespace()?;
            let wide = maxval > 255;
            let needed = count * if wide { 2 } else { 1 };
            let raw = cursor.remaining();
            if raw.len() < needed {
                return Err(ImageError::CorruptFile(format!(
                    "truncated payload: need {needed} bytes, have {}",
                    raw.len()
                )));
            }
            if wide {
                for chunk in raw[..needed].chunks_exact(2) {
                    let v = u16::from_be_bytes([chunk[0], chunk[1]]) as usize;
                    if v > maxval {
                        return Err(ImageError::CorruptFile(format!(
                            "sample {v} exceeds maxval {maxval}"
                        )));
                    }
                    samples.push(T::of(v as f64 * scale));
                }
            } else {
                for &b in &raw[..needed] {
                    let v = b as usize;
                    if v > maxval {
                        return Err(ImageError::CorruptFile(format!(
                            "sample {v} exceeds maxval {maxval}"
                        )));
                    }
                    samples.push(T::of(v as f64 * scale));
                }
            }
        } else {
            for _ in 0..count {
                let v = cursor.header_int("sample")?;
                if v > maxval {
                    return Err(ImageError::CorruptFile(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )));
                }
                samples.push(T::of(v as f64 * scale));
            }
        }
        Self::from_samples(width, height, samples)
    }

    /// Writes binary PGM (`P5`, maxval 255), rounding and clipping samples.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        fs::write(path, self.encode_pgm())?;
        Ok(())
    }

    /// Encodes as binary PGM (`P5`, maxval 255).
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(
            self.samples()
                .iter()
                .map(|&v| v.dbl().round().clamp(0.0, 255.0) as u8),
        );
        out
    }

    /// Centered crop to the largest dimensions that are multiples of `m`;
    /// offsets are `floor((dim mod m) / 2)`.
    pub fn crop_to_multiple(&self, m: usize) -> Result<Self, ImageError> {
        assert!(m > 0, "crop multiple must be positive");
        let (w, h) = (self.width(), self.height());
        if w < m || h < m {
            return Err(ImageError::ImageTooSmall {
                width: w,
                height: h,
                multiple: m,
            });
        }
        let new_w = (w / m) * m;
        let new_h = (h / m) * m;
        if new_w == w && new_h == h {
            return Ok(self.clone());
        }
        let x0 = (w % m) / 2;
        let y0 = (h % m) / 2;
        let mut samples = Vec::with_capacity(new_w * new_h);
        for r in y0..y0 + new_h {
            for c in x0..x0 + new_w {
                samples.push(self.at(r, c));
            }
        }
        Self::from_samples(new_w, new_h, samples)
    }

    /// Separable Gaussian blur with kernel radius `ceil(3σ)`, truncated
    /// weights renormalized to sum to 1, symmetric-reflection borders.
    pub fn gaussian_blur(&self, sigma: T) -> Result<Self, ImageError> {
        let s = sigma.dbl();
        if s <= 0.0 || !s.is_finite() {
            return Err(ImageError::InvalidSigma(s));
        }
        let radius = (3.0 * s).ceil() as usize;
        let mut kernel = Vec::with_capacity(2 * radius + 1);
        let mut sum = 0.0;
        for k in -(radius as isize)..=(radius as isize) {
            let w = (-(k * k) as f64 / (2.0 * s * s)).exp();
            kernel.push(w);
            sum += w;
        }
        let kernel: Vec<T> = kernel.into_iter().map(|w| T::of(w / sum)).collect();

        let (w, h) = (self.width(), self.height());
        // Horizontal pass.
        let mut tmp = Grid::filled(h, w, T::zero());
        for r in 0..h {
            for c in 0..w {
                let mut acc = T::zero();
                for (ki, &kw) in kernel.iter().enumerate() {
                    let cc = reflect(c as isize + ki as isize - radius as isize, w);
                    acc += kw * self.at(r, cc);
                }
                tmp.set(r, c, acc);
            }
        }
        // Vertical pass.
        let mut out = Grid::filled(h, w, T::zero());
        for r in 0..h {
            for c in 0..w {
                let mut acc = T::zero();
                for (ki, &kw) in kernel.iter().enumerate() {
                    let rr = reflect(r as isize + ki as isize - radius as isize, h);
                    acc += kw * tmp.get(rr, c);
                }
                out.set(r, c, acc);
            }
        }
        Self::from_grid(out)
    }

    /// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sigma`
    /// from a seeded deterministic generator, clipping to `[0, 255]`.
    /// `sigma = 0` returns the input unchanged, bit for bit.
    pub fn add_white_noise(&self, sigma: T, seed: u64) -> Self {
        if sigma == T::zero() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = T::zero();
        let hi = T::of(255.0);
        let samples = self
            .samples()
            .iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (v + sigma * T::of(z)).max(lo).min(hi)
            })
            .collect();
        Self::from_samples(self.width(), self.height(), samples).expect("dims preserved")
    }
}

// Half-sample symmetric reflection (…, 1, 0 | 0, 1, …, n-1 | n-1, …),
// folding repeatedly so kernels wider than the image stay in range.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i % period;
    if m < 0 {
        m += period;
    }
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn magic(&mut self) -> Result<String, ImageError> {
        if self.bytes.len() < 2 {
            return Err(ImageError::CorruptFile(
                "shorter than a magic number".into(),
            ));
        }
        let magic = &self.bytes[..2];
        self.pos = 2;
        if magic[0] != b'P' {
            return Err(ImageError::UnsupportedFormat(format!(
                "magic {:?} is not a Netpbm signature",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(String::from_utf8_lossy(magic).into_owned())
    }

    // Skips whitespace and '#' comments, then reads a decimal integer.
    fn header_int(&mut self, what: &str) -> Result<usize, ImageError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let start = self.pos;
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ImageError::CorruptFile(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::CorruptFile(format!("unreadable {what}")))
    }

    fn single_whitespace(&mut self) -> Result<(), ImageError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ImageError::CorruptFile(
                "missing whitespace before binary payload".into(),
            )),
        }
    }

    fn remaining(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}
