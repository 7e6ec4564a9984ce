//! Bessel K Forms density: evaluation, moment-based parameter
//! estimation, and a Gamma-mixture sampler used as a test oracle.
//!
//! The family is parameterized by a shape `α > 0` and a scale `β > 0`,
//! with variance `αβ` and kurtosis `3 + 3/α`; it is the distribution of
//! `√(βG)·Z` for `G ~ Gamma(α, 1)` and `Z` standard normal. Estimation
//! is by the moment formulas `α̂ = 3/(kurtosis − 3)`, `β̂ = variance/α̂`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use thiserror::Error;

use crate::real::Real;
use crate::special::{ln_bessel_k, ln_gamma};

/// Largest admissible shape; near-Gaussian subbands are clamped here.
pub const ALPHA_MAX: f64 = 1e3;

/// Kurtosis guard: below `3 + KURTOSIS_DELTA` the shape estimate is
/// treated as near-Gaussian and clamped to [`ALPHA_MAX`].
pub const KURTOSIS_DELTA: f64 = 3e-3;

#[derive(Debug, Error, PartialEq)]
pub enum BkfError {
    #[error("InvalidParams: alpha={alpha}, beta={beta} (need finite alpha in (0, {ALPHA_MAX}], beta > 0)")]
    InvalidParams { alpha: f64, beta: f64 },
    #[error("TooFewSamples: got {got}, need at least {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("DegenerateSample: zero variance, kurtosis undefined")]
    DegenerateSample,
}

/// Shape and scale of a fitted Bessel K Forms density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkfParams<T> {
    alpha: T,
    beta: T,
}

impl<T: Real> BkfParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self, BkfError> {
        let (a, b) = (alpha.dbl(), beta.dbl());
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 || a > ALPHA_MAX || b <= 0.0 {
            return Err(BkfError::InvalidParams { alpha: a, beta: b });
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }

    /// Model variance, `αβ`.
    pub fn variance(&self) -> T {
        self.alpha * self.beta
    }
}

/// Population second and fourth central moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats<T> {
    n: usize,
    variance: T,
    kurtosis: T,
}

impl<T: Real> SampleStats<T> {
    /// Builds stats from precomputed moments; `variance` must be positive
    /// and `kurtosis ≥ 1` (it is `m₄/m₂²` of a real sample).
    pub fn from_moments(n: usize, variance: T, kurtosis: T) -> Result<Self, BkfError> {
        if n < 4 {
            return Err(BkfError::TooFewSamples { got: n, min: 4 });
        }
        let v = variance.dbl();
        if !v.is_finite() || v <= 0.0 {
            return Err(BkfError::DegenerateSample);
        }
        // m4/m2^2 >= 1 for any real sample by Cauchy-Schwarz.
        let k = kurtosis.dbl();
        if !k.is_finite() || k < 1.0 {
            return Err(BkfError::DegenerateSample);
        }
        Ok(Self {
            n,
            variance,
            kurtosis,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    pub fn kurtosis(&self) -> T {
        self.kurtosis
    }
}

/// Population variance and kurtosis (`m₄/m₂²`, no bias correction).
pub fn sample_stats<T: Real>(x: &[T]) -> Result<SampleStats<T>, BkfError> {
    if x.len() < 4 {
        return Err(BkfError::TooFewSamples {
            got: x.len(),
            min: 4,
        });
    }
    let n = T::of(x.len() as f64);
    let mean = x.iter().copied().sum::<T>() / n;
    let mut m2 = T::zero();
    let mut m4 = T::zero();
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 <= T::zero() {
        return Err(BkfError::DegenerateSample);
    }
    SampleStats::from_moments(x.len(), m2, m4 / (m2 * m2))
}

/// Moment estimator for the BKF parameters.
///
/// Samples with kurtosis at or below the near-Gaussian guard get the
/// shape clamped to [`ALPHA_MAX`]; the scale is `variance/α` either way.
pub fn estimate<T: Real>(stats: &SampleStats<T>) -> BkfParams<T> {
    let kurt = stats.kurtosis().dbl();
    let alpha = if kurt > 3.0 + KURTOSIS_DELTA {
        (3.0 / (kurt - 3.0)).min(ALPHA_MAX)
    } else {
        ALPHA_MAX
    };
    let alpha_t = T::of(alpha);
    BkfParams {
        alpha: alpha_t,
        beta: stats.variance() / alpha_t,
    }
}

/// BKF probability density at `x`.
///
/// For `α ≤ 1/2` the density diverges at the origin; `pdf(0)` then
/// returns `+∞` (the true limit), and quadrature over the density must
/// treat 0 as an improper endpoint.
pub fn pdf<T: Real>(x: T, p: &BkfParams<T>) -> T {
    let alpha = p.alpha.dbl();
    let beta = p.beta.dbl();
    let ax = x.dbl().abs();
    if ax == 0.0 {
        if alpha > 0.5 {
            let ln_f0 = ln_gamma(alpha - 0.5)
                - ln_gamma(alpha)
                - 0.5 * (2.0 * std::f64::consts::PI * beta).ln();
            return T::of(ln_f0.exp());
        }
        return T::infinity();
    }
    let nu = alpha - 0.5;
    let z = (2.0 / beta).sqrt() * ax;
    let ln_k = ln_bessel_k(nu, z).expect("valid BKF parameters imply a valid Bessel argument");
    let ln_f = -0.5 * std::f64::consts::PI.ln()
        - ln_gamma(alpha)
        - (0.5 * alpha + 0.25) * (beta / 2.0).ln()
        + nu * (ax / 2.0).ln()
        + ln_k;
    T::of(ln_f.exp())
}

/// Half-range wide enough to hold all but roughly `1e-12` of the
/// density's mass: a Gaussian-like scale padded against the Gamma
/// mixing tail, plus the exponential tail rate `√(2/β)` that dominates
/// for small shapes.
pub fn tail_radius(alpha: f64, beta: f64) -> f64 {
    let g_tail = alpha + 12.0 * alpha.sqrt() + 60.0;
    (7.5 * (beta * g_tail).sqrt()).max(40.0 * (beta / 2.0).sqrt())
}

/// Draws `n` values from the BKF density as the Gamma scale-mixture
/// `√(β·g)·z`, `g ~ Gamma(α, 1)`, `z ~ N(0, 1)`, from a seeded
/// deterministic generator. Same seed, same sequence.
pub fn bkf_sample<T: Real>(p: &BkfParams<T>, n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(p.alpha.dbl(), 1.0).expect("validated shape");
    let beta = p.beta.dbl();
    (0..n)
        .map(|_| {
            let g: f64 = gamma.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            T::of((beta * g).sqrt() * z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn params(a: f64, b: f64) -> BkfParams<f64> {
        BkfParams::new(a, b).unwrap()
    }

    #[test]
    fn stats_two_point_symmetric() {
        let s = sample_stats(&[-1.0f64, -1.0, 1.0, 1.0]).unwrap();
        assert!((s.variance() - 1.0).abs() < 1e-15);
        assert!((s.kurtosis() - 1.0).abs() < 1e-15);
        assert_eq!(s.n(), 4);
    }

    #[test]
    fn stats_degenerate_and_short() {
        assert_eq!(
            sample_stats(&[5.0f64, 5.0, 5.0, 5.0]),
            Err(BkfError::DegenerateSample)
        );
        assert_eq!(
            sample_stats(&[1.0f64, 2.0, 3.0]),
            Err(BkfError::TooFewSamples { got: 3, min: 4 })
        );
    }

    #[test]
    fn stats_gaussian_kurtosis() {
        // Seeded standard normal sample; population kurtosis must sit near 3.
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x: Vec<f64> = (0..1_000_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let s = sample_stats(&x).unwrap();
        assert!(
            (s.kurtosis() - 3.0).abs() < 0.05,
            "kurtosis {}",
            s.kurtosis()
        );
    }

    #[test]
    fn estimate_formula_cases() {
        let p = estimate(&SampleStats::from_moments(100, 2.0f64, 6.0).unwrap());
        assert!((p.alpha() - 1.0).abs() < 1e-15);
        assert!((p.beta() - 2.0).abs() < 1e-15);

        let p = estimate(&SampleStats::from_moments(100, 3.0f64, 4.5).unwrap());
        assert!((p.alpha() - 2.0).abs() < 1e-15);
        assert!((p.beta() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn estimate_near_gaussian_clamp() {
        // Kurtosis exactly 3: clamp, no panic, beta = variance / 1e3.
        let p = estimate(&SampleStats::from_moments(100, 2.0f64, 3.0).unwrap());
        assert_eq!(p.alpha(), ALPHA_MAX);
        assert!((p.beta() - 2.0 / ALPHA_MAX).abs() < 1e-18);
        // Just above the guard still clamps.
        let p = estimate(&SampleStats::from_moments(100, 2.0f64, 3.0 + KURTOSIS_DELTA).unwrap());
        assert_eq!(p.alpha(), ALPHA_MAX);
    }

    #[test]
    fn pdf_laplace_reduction() {
        // α = 1 reduces the density to Laplace with rate √(2/β):
        // f(x) = (λ/2) e^{-λ|x|}. With β = 2, λ = 1 and f(0) = 1/2.
        let p = params(1.0, 2.0);
        assert!((pdf(0.0, &p) - 0.5).abs() < 1e-12);
        for &x in &[0.1f64, 0.5, 1.0, 3.0, -2.2] {
            let expect = 0.5 * (-x.abs()).exp();
            let got = pdf(x, &p);
            assert!(
                (got - expect).abs() < 1e-10 * expect,
                "pdf({x}) = {got}, want {expect}"
            );
        }
    }

    #[test]
    fn pdf_diverges_at_origin_for_small_alpha() {
        assert!(pdf(0.0, &params(0.4, 1.0)).is_infinite());
        assert!(pdf(0.0, &params(0.5, 1.0)).is_infinite());
        assert!(pdf(0.0, &params(0.51, 1.0)).is_finite());
    }

    #[test]
    fn pdf_is_even() {
        let p = params(0.7, 1.3);
        for &x in &[0.013, 0.8, 2.7, 11.0] {
            assert_eq!(pdf(x, &p), pdf(-x, &p));
        }
    }

    #[test]
    fn pdf_normalizes_over_parameter_grid() {
        for &alpha in &[0.3, 0.5, 1.0, 2.0, 10.0] {
            for &beta in &[0.5, 1.0, 4.0] {
                let p = params(alpha, beta);
                let r = tail_radius(alpha, beta);
                // Split at the (possibly singular) origin.
                let half = integrate(|x| pdf(x, &p), 0.0, r, 1e-7).unwrap();
                let total = 2.0 * half;
                assert!(
                    (total - 1.0).abs() < 1e-4,
                    "∫pdf(α={alpha}, β={beta}) = {total}"
                );
            }
        }
    }

    #[test]
    fn sampler_matches_moment_identities() {
        // Var = αβ and Kurt = 3 + 3/α.
        let p = params(2.0, 0.5);
        let x = bkf_sample(&p, 1_000_000, 42);
        let s = sample_stats(&x).unwrap();
        assert!(
            (s.variance() - 1.0).abs() < 0.02,
            "variance {}",
            s.variance()
        );
        assert!(
            (s.kurtosis() - 4.5).abs() < 0.05 * 4.5,
            "kurtosis {}",
            s.kurtosis()
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = params(0.8, 1.5);
        let a = bkf_sample(&p, 1000, 7);
        let b = bkf_sample(&p, 1000, 7);
        assert_eq!(a, b);
        let c = bkf_sample(&p, 1000, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn estimator_recovers_sampler_parameters() {
        // estimate(sample_stats(bkf_sample(p))) recovers p within 5%.
        let mut seed = 1000;
        for &(alpha, beta) in &[
            (0.5, 0.5),
            (0.5, 2.0),
            (1.0, 0.5),
            (1.0, 2.0),
            (2.0, 0.5),
            (2.0, 2.0),
            (0.8, 1.5),
        ] {
            seed += 1;
            let p = params(alpha, beta);
            let x = bkf_sample(&p, 1_000_000, seed);
            let est = estimate(&sample_stats(&x).unwrap());
            let rel_a = (est.alpha() - alpha).abs() / alpha;
            let rel_b = (est.beta() - beta).abs() / beta;
            assert!(
                rel_a < 0.05 && rel_b < 0.05,
                "α={alpha}, β={beta}: estimated ({}, {}), rel ({rel_a:.3}, {rel_b:.3})",
                est.alpha(),
                est.beta()
            );
        }
    }

    #[test]
    fn empirical_cdf_matches_model_cdf() {
        // Kolmogorov–Smirnov distance between 1e5 draws and the
        // numerically integrated model CDF stays below 0.01.
        let p = params(0.8, 1.5);
        let n = 100_000usize;
        let mut x = bkf_sample(&p, n, 4242);
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // CDF at each order statistic by cumulative quadrature between
        // consecutive points, anchored at F(x_min) computed from the left
        // tail: F(x) = 0.5 - ∫_x^0 f for x < 0.
        let first = x[0];
        let mut cdf = Vec::with_capacity(n);
        let f0 = 0.5 - integrate(|t| pdf(t, &p), first, 0.0, 1e-9).unwrap();
        cdf.push(f0);
        for w in x.windows(2) {
            let seg = if w[1] > w[0] {
                integrate(|t| pdf(t, &p), w[0], w[1], 1e-12)
                    .unwrap_or_else(|_| 0.5 * (pdf(w[0], &p) + pdf(w[1], &p)) * (w[1] - w[0]))
            } else {
                0.0
            };
            cdf.push(cdf.last().unwrap() + seg);
        }
        let mut ks = 0.0f64;
        for (i, &f) in cdf.iter().enumerate() {
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(BkfParams::new(0.0f64, 1.0).is_err());
        assert!(BkfParams::new(-1.0f64, 1.0).is_err());
        assert!(BkfParams::new(1.0f64, 0.0).is_err());
        assert!(BkfParams::new(f64::NAN, 1.0).is_err());
        assert!(BkfParams::new(2e3f64, 1.0).is_err());
    }
}
