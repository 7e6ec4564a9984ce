//! Deterministic synthetic imagery for tests, demos, and the bundled
//! sample set.
//!
//! The generator layers multi-octave smoothed noise (texture energy at
//! every decomposition scale) under a few hard geometric structures, so
//! detail subbands come out moderately heavy-tailed like photographic
//! content rather than degenerate (flat regions) or edge-dominated
//! (extreme kurtosis pinning the fitted shape at its floor).

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::GrayImage;
use crate::real::Real;

/// A seeded textured image with edges, multi-scale texture, and smooth
/// shading, values in `[0, 255]`.
pub fn textured_image<T: Real>(width: usize, height: usize, seed: u64) -> GrayImage<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0f64; width * height];

    // Smooth background: a tilted gradient plus long-wavelength waves
    // with seeded phases.
    let (ph1, ph2, ph3) = (
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    for r in 0..height {
        for c in 0..width {
            let x = c as f64 / width as f64;
            let y = r as f64 / height as f64;
            let mut v = 100.0 + 40.0 * x + 25.0 * y;
            v += 18.0 * (6.0 * x + ph1).sin() * (4.0 * y + ph2).cos();
            v += 10.0 * (11.0 * (x + y) + ph3).sin();
            samples[r * width + c] = v;
        }
    }

    // Texture octaves: white noise smoothed at increasing scales, each
    // rescaled to a target deviation so all decomposition levels see
    // substantial energy.
    let octaves: [(f64, f64); 4] = [(0.0, 5.0), (1.0, 7.0), (2.5, 8.0), (6.0, 9.0)];
    for &(blur_sigma, target_sd) in &octaves {
        let raw: Vec<f64> = (0..width * height)
            .map(|_| rng.random_range(-1.0f64..1.0))
            .collect();
        let layer = GrayImage::<f64>::from_samples(width, height, raw).expect("valid dimensions");
        let layer = if blur_sigma > 0.0 {
            layer.gaussian_blur(blur_sigma).expect("positive sigma")
        } else {
            layer
        };
        let data = layer.samples();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let sd = (data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / data.len() as f64)
            .sqrt()
            .max(1e-12);
        let gain = target_sd / sd;
        for (s, &v) in samples.iter_mut().zip(data) {
            *s += gain * (v - mean);
        }
    }

    // Hard structures: a bright disc and a dark diagonal band.
    let (cx, cy) = (
        rng.random_range(0.25..0.75) * width as f64,
        rng.random_range(0.25..0.75) * height as f64,
    );
    let radius = 0.18 * width.min(height) as f64;
    let band_offset = rng.random_range(-0.2..0.2) * width as f64;
    for r in 0..height {
        for c in 0..width {
            let dx = c as f64 - cx;
            let dy = r as f64 - cy;
            if (dx * dx + dy * dy).sqrt() < radius {
                samples[r * width + c] += 45.0;
            }
            let t = c as f64 - r as f64 + band_offset;
            if (0.0..0.12 * width as f64).contains(&t) {
                samples[r * width + c] -= 35.0;
            }
        }
    }

    let samples = samples
        .into_iter()
        .map(|v| T::of(v.clamp(0.0, 255.0)))
        .collect();
    GrayImage::from_samples(width, height, samples).expect("valid dimensions")
}
