//! The five distortion measures over per-band density parameters.
//!
//! Q₁/Q₂ sum absolute shape/scale differences, Q₃/Q₄ sum the geometric
//! mean of absolute and reference-relative deviations, and Q₅ is the
//! root-sum-of-squares of per-band L² distances between the fitted
//! densities. The L² distance has two routes: adaptive quadrature of the
//! squared density difference (the ground truth) and an analytic form in
//! Gamma functions and ₂F₁ derived from the Gamma-mixture representation
//! of the density, validated against the quadrature route in tests.

use thiserror::Error;

use crate::bkf::{pdf, tail_radius, BkfError, BkfParams};
use crate::quad::{integrate, QuadError};
use crate::real::Real;
use crate::special::{ln_gamma, SpecialError};

pub use crate::special::hyp2f1 as hypergeometric_2f1;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("EmptyBands: measure needs at least one band pair")]
    EmptyBands,
    #[error("NonIntegrable: shape {alpha} <= 1/4, the squared-density integral diverges")]
    NonIntegrable { alpha: f64 },
    #[error("InvalidParams: {0}")]
    InvalidParams(#[from] BkfError),
    #[error("HypergeometricDivergence: {0}")]
    HypergeometricDivergence(#[from] SpecialError),
    #[error("Quadrature: {0}")]
    Quadrature(#[from] QuadError),
}

/// Subband address: level and detail index, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BandId {
    pub level: u8,
    pub detail: u8,
}

/// Fitted parameters for one subband of the reference image and the
/// corresponding subband of the distorted image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPair<T> {
    pub band: BandId,
    pub reference: BkfParams<T>,
    pub distorted: BkfParams<T>,
}

/// Which of the five measures produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
}

impl MeasureId {
    pub const ALL: [MeasureId; 5] = [
        MeasureId::Q1,
        MeasureId::Q2,
        MeasureId::Q3,
        MeasureId::Q4,
        MeasureId::Q5,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MeasureId::Q1 => "q1",
            MeasureId::Q2 => "q2",
            MeasureId::Q3 => "q3",
            MeasureId::Q4 => "q4",
            MeasureId::Q5 => "q5",
        }
    }
}

impl std::str::FromStr for MeasureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "q1" => Ok(MeasureId::Q1),
            "q2" => Ok(MeasureId::Q2),
            "q3" => Ok(MeasureId::Q3),
            "q4" => Ok(MeasureId::Q4),
            "q5" => Ok(MeasureId::Q5),
            other => Err(format!("unknown measure {other:?} (expected q1..q5)")),
        }
    }
}

impl std::fmt::Display for MeasureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A non-negative distortion score tagged with the measure that made it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore<T> {
    pub value: T,
    pub measure: MeasureId,
}

fn require_bands<T>(bands: &[BandPair<T>]) -> Result<(), MetricError> {
    if bands.is_empty() {
        Err(MetricError::EmptyBands)
    } else {
        Ok(())
    }
}

/// Q₁: sum over bands of `|α_r − α_d|`.
pub fn q1<T: Real>(bands: &[BandPair<T>]) -> Result<QualityScore<T>, MetricError> {
    require_bands(bands)?;
    let value = bands
        .iter()
        .map(|b| (b.reference.alpha() - b.distorted.alpha()).abs())
        .sum();
    Ok(QualityScore {
        value,
        measure: MeasureId::Q1,
    })
}

/// Q₂: sum over bands of `|β_r − β_d|`.
pub fn q2<T: Real>(bands: &[BandPair<T>]) -> Result<QualityScore<T>, MetricError> {
    require_bands(bands)?;
    let value = bands
        .iter()
        .map(|b| (b.reference.beta() - b.distorted.beta()).abs())
        .sum();
    Ok(QualityScore {
        value,
        measure: MeasureId::Q2,
    })
}

/// Q₃: sum over bands of `√(A·R)` with `A = |α_r − α_d|` and
/// `R = |α_r − α_d| / α_r`.
pub fn q3<T: Real>(bands: &[BandPair<T>]) -> Result<QualityScore<T>, MetricError> {
    require_bands(bands)?;
    let value = bands
        .iter()
        .map(|b| {
            let a = (b.reference.alpha() - b.distorted.alpha()).abs();
            (a * (a / b.reference.alpha())).sqrt()
        })
        .sum();
    Ok(QualityScore {
        value,
        measure: MeasureId::Q3,
    })
}

/// Q₄: the Q₃ construction on the scale parameter β.
pub fn q4<T: Real>(bands: &[BandPair<T>]) -> Result<QualityScore<T>, MetricError> {
    require_bands(bands)?;
    let value = bands
        .iter()
        .map(|b| {
            let a = (b.reference.beta() - b.distorted.beta()).abs();
            (a * (a / b.reference.beta())).sqrt()
        })
        .sum();
    Ok(QualityScore {
        value,
        measure: MeasureId::Q4,
    })
}

// Squared-density integrability needs α > 1/4 on both sides.
fn check_integrable(a1: f64, a2: f64) -> Result<(), MetricError> {
    let amin = a1.min(a2);
    if amin <= 0.25 {
        return Err(MetricError::NonIntegrable { alpha: amin });
    }
    Ok(())
}

/// Per-call absolute tolerance of the quadrature route.
pub const L2_QUAD_TOL: f64 = 1e-8;

/// L² distance between two densities by adaptive quadrature of the
/// squared difference — the ground-truth route.
///
/// The half-line integral splits at a point on the singular scale: the
/// inner piece is regularized by the substitution `x = u^m` (the
/// squared densities behave like `x^{4α-2}` at the origin), the outer
/// piece runs to a radius holding all but ~1e-12 of both masses.
pub fn l2_distance_quadrature<T: Real>(
    p1: &BkfParams<T>,
    p2: &BkfParams<T>,
) -> Result<T, MetricError> {
    let (a1, b1) = (p1.alpha().dbl(), p1.beta().dbl());
    let (a2, b2) = (p2.alpha().dbl(), p2.beta().dbl());
    check_integrable(a1, a2)?;
    let q1 = BkfParams::new(a1, b1)?;
    let q2 = BkfParams::new(a2, b2)?;
    let diff2 = |x: f64| {
        let d = pdf(x, &q1) - pdf(x, &q2);
        d * d
    };

    let r = tail_radius(a1, b1).max(tail_radius(a2, b2));
    let x0 = ((b1 / 2.0).sqrt().min((b2 / 2.0).sqrt())).min(r / 4.0);
    let amin = a1.min(a2);
    let tol = L2_QUAD_TOL / 4.0;

    let inner = if amin >= 0.75 {
        integrate(diff2, 0.0, x0, tol)?
    } else {
        let m = ((3.0 / (4.0 * amin - 1.0)).ceil() as i32).clamp(2, 64);
        let u_max = x0.powf(1.0 / m as f64);
        integrate(
            |u| diff2(u.powi(m)) * m as f64 * u.powi(m - 1),
            0.0,
            u_max,
            tol,
        )?
    };
    let outer = integrate(diff2, x0, r, tol)?;
    Ok(T::of((2.0 * (inner + outer)).max(0.0).sqrt()))
}

/// L² distance in closed form.
///
/// Writing each density as a Gamma scale-mixture of centered normals
/// gives `∫ f_i f_j = ξ(α_i + α_j) · E-terms / √(2π β)` with
/// `ξ(s) = Γ(s − ½)/Γ(s)`; collecting the three terms:
///
/// ```text
/// d² = ( ξ(2α₁)/√β₁ + ξ(2α₂)/√β₂
///        − 2 ξ(α₁+α₂) F(α₂, ½; α₁+α₂; 1 − β₂/β₁) / √β₁ ) / √(2π)
/// ```
///
/// with the labels ordered so β₁ ≥ β₂, which keeps the ₂F₁ argument in
/// `[0, 1)`. The expression is symmetric in the two densities (Pfaff's
/// transformation maps one labeling to the other). Tests pin this form
/// against the quadrature route over a parameter grid.
pub fn l2_distance_closed<T: Real>(p1: &BkfParams<T>, p2: &BkfParams<T>) -> Result<T, MetricError> {
    let (a1, b1) = (p1.alpha().dbl(), p1.beta().dbl());
    let (a2, b2) = (p2.alpha().dbl(), p2.beta().dbl());
    check_integrable(a1, a2)?;
    let ((aa, ba), (ab, bb)) = if b1 >= b2 {
        ((a1, b1), (a2, b2))
    } else {
        ((a2, b2), (a1, b1))
    };
    let z = 1.0 - bb / ba;
    let f = hypergeometric_2f1(ab, 0.5, aa + ab, z)?;
    let xi = |s: f64| (ln_gamma(s - 0.5) - ln_gamma(s)).exp();
    let d2 = (xi(2.0 * aa) / ba.sqrt() + xi(2.0 * ab) / bb.sqrt()
        - 2.0 * xi(aa + ab) * f / ba.sqrt())
        / (2.0 * std::f64::consts::PI).sqrt();
    Ok(T::of(d2.max(0.0).sqrt()))
}

/// Q₅: root-sum-of-squares of per-band L² distances. Uses the closed
/// form, falling back to the quadrature route for any band where the
/// hypergeometric evaluation fails.
pub fn q5<T: Real>(bands: &[BandPair<T>]) -> Result<QualityScore<T>, MetricError> {
    require_bands(bands)?;
    let mut sum = T::zero();
    for b in bands {
        let d = match l2_distance_closed(&b.reference, &b.distorted) {
            Ok(d) => d,
            Err(MetricError::HypergeometricDivergence(_)) => {
                l2_distance_quadrature(&b.reference, &b.distorted)?
            }
            Err(e) => return Err(e),
        };
        sum += d * d;
    }
    Ok(QualityScore {
        value: sum.sqrt(),
        measure: MeasureId::Q5,
    })
}

/// Dispatches one of the five measures by id.
pub fn score<T: Real>(
    measure: MeasureId,
    bands: &[BandPair<T>],
) -> Result<QualityScore<T>, MetricError> {
    match measure {
        MeasureId::Q1 => q1(bands),
        MeasureId::Q2 => q2(bands),
        MeasureId::Q3 => q3(bands),
        MeasureId::Q4 => q4(bands),
        MeasureId::Q5 => q5(bands),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, b: f64) -> BkfParams<f64> {
        BkfParams::new(a, b).unwrap()
    }

    fn pair(band: (u8, u8), r: (f64, f64), d: (f64, f64)) -> BandPair<f64> {
        BandPair {
            band: BandId {
                level: band.0,
                detail: band.1,
            },
            reference: p(r.0, r.1),
            distorted: p(d.0, d.1),
        }
    }

    fn nine_identical() -> Vec<BandPair<f64>> {
        (1..=3u8)
            .flat_map(|l| (1..=3u8).map(move |d| pair((l, d), (0.8, 1.5), (0.8, 1.5))))
            .collect()
    }

    #[test]
    fn all_measures_vanish_on_identical_bands() {
        let bands = nine_identical();
        for m in MeasureId::ALL {
            let s = score(m, &bands).unwrap();
            assert!(
                s.value.abs() < 1e-7,
                "{m} on identical bands gave {}",
                s.value
            );
        }
    }

    #[test]
    fn q1_q2_formula_values() {
        let one = [pair((1, 1), (1.0, 2.0), (1.5, 2.75))];
        assert!((q1(&one).unwrap().value - 0.5).abs() < 1e-15);
        assert!((q2(&one).unwrap().value - 0.75).abs() < 1e-15);

        // Nine bands each contributing 0.1 sum to 0.9.
        let bands: Vec<_> = (1..=3u8)
            .flat_map(|l| (1..=3u8).map(move |d| pair((l, d), (1.0, 1.0), (1.1, 1.0))))
            .collect();
        assert!((q1(&bands).unwrap().value - 0.9).abs() < 1e-12);
    }

    #[test]
    fn q3_q4_formula_values() {
        let one = [pair((1, 1), (2.0, 4.0), (1.0, 2.0))];
        // A = 1, R = 0.5 → √0.5; and for β: A = 2, R = 0.5 → 1.
        assert!((q3(&one).unwrap().value - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((q4(&one).unwrap().value - 1.0).abs() < 1e-12);

        // With α_r = 1 the relative deviation equals the absolute one, so
        // q3 = q1 on that band.
        let unit = [pair((1, 1), (1.0, 1.0), (1.7, 1.0))];
        assert!((q3(&unit).unwrap().value - q1(&unit).unwrap().value).abs() < 1e-12);

        // Doubling both scales multiplies the band term by √2.
        let base = [pair((1, 1), (1.0, 4.0), (1.0, 2.0))];
        let doubled = [pair((1, 1), (1.0, 8.0), (1.0, 4.0))];
        let ratio = q4(&doubled).unwrap().value / q4(&base).unwrap().value;
        assert!((ratio - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn band_order_is_irrelevant() {
        let mut bands = vec![
            pair((1, 1), (0.5, 1.0), (0.6, 1.2)),
            pair((1, 2), (1.5, 0.5), (1.2, 0.7)),
            pair((2, 1), (2.5, 2.0), (2.5, 3.0)),
        ];
        let before: Vec<f64> = MeasureId::ALL
            .iter()
            .map(|&m| score(m, &bands).unwrap().value)
            .collect();
        bands.reverse();
        let after: Vec<f64> = MeasureId::ALL
            .iter()
            .map(|&m| score(m, &bands).unwrap().value)
            .collect();
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_bands_is_an_error() {
        for m in MeasureId::ALL {
            assert!(matches!(score::<f64>(m, &[]), Err(MetricError::EmptyBands)));
        }
    }

    #[test]
    fn q1_q2_q5_symmetric_q3_q4_not() {
        let fwd = [pair((1, 1), (2.0, 4.0), (1.0, 1.5))];
        let rev = [pair((1, 1), (1.0, 1.5), (2.0, 4.0))];
        for m in [MeasureId::Q1, MeasureId::Q2, MeasureId::Q5] {
            let a = score(m, &fwd).unwrap().value;
            let b = score(m, &rev).unwrap().value;
            assert!((a - b).abs() < 1e-8, "{m}: {a} vs {b}");
        }
        // The relative deviation normalizes by the reference, so swapping
        // roles changes Q3 and Q4.
        for m in [MeasureId::Q3, MeasureId::Q4] {
            let a = score(m, &fwd).unwrap().value;
            let b = score(m, &rev).unwrap().value;
            assert!((a - b).abs() > 1e-3, "{m} should be asymmetric: {a} vs {b}");
        }
    }

    #[test]
    fn quadrature_distance_laplace_reduction() {
        // α = 1 densities are Laplace with rate λ = √(2/β); the squared
        // difference integrates in closed form:
        // d² = (λ₁ + λ₂)/4 − λ₁λ₂/(λ₁ + λ₂).
        let d = l2_distance_quadrature(&p(1.0, 1.0), &p(1.0, 2.0)).unwrap();
        let (l1, l2) = (2.0f64.sqrt(), 1.0f64);
        let exact = ((l1 + l2) / 4.0 - l1 * l2 / (l1 + l2)).sqrt();
        assert!((d - exact).abs() < 1e-7, "{d} vs {exact}");
    }

    #[test]
    fn quadrature_distance_basic_properties() {
        let a = p(0.7, 1.3);
        assert!(l2_distance_quadrature(&a, &a).unwrap() < 1e-4);

        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..5 {
            let x = p(rng.random_range(0.3..3.0), rng.random_range(0.3..4.0));
            let y = p(rng.random_range(0.3..3.0), rng.random_range(0.3..4.0));
            let dxy = l2_distance_quadrature(&x, &y).unwrap();
            let dyx = l2_distance_quadrature(&y, &x).unwrap();
            assert!((dxy - dyx).abs() < 1e-7, "symmetry: {dxy} vs {dyx}");
        }
    }

    #[test]
    fn non_integrable_shapes_are_rejected() {
        let bad = p(0.25, 1.0);
        let ok = p(1.0, 1.0);
        assert!(matches!(
            l2_distance_quadrature(&bad, &ok),
            Err(MetricError::NonIntegrable { .. })
        ));
        assert!(matches!(
            l2_distance_closed(&ok, &bad),
            Err(MetricError::NonIntegrable { .. })
        ));
    }

    #[test]
    fn closed_form_matches_quadrature_over_grid() {
        // The acceptance grid: α ∈ {0.3, 0.5, 1, 2}², β ∈ {0.5, 1, 4}².
        let alphas = [0.3, 0.5, 1.0, 2.0];
        let betas = [0.5, 1.0, 4.0];
        for &a1 in &alphas {
            for &b1 in &betas {
                for &a2 in &alphas {
                    for &b2 in &betas {
                        let x = p(a1, b1);
                        let y = p(a2, b2);
                        let closed = l2_distance_closed(&x, &y).unwrap();
                        let quad = l2_distance_quadrature(&x, &y).unwrap();
                        let err = (closed - quad).abs();
                        assert!(
                            err <= 1e-5 * quad.abs() + 1e-7,
                            "({a1},{b1}) vs ({a2},{b2}): closed {closed}, quad {quad}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let x = p(rng.random_range(0.26..5.0), rng.random_range(0.01..10.0));
            let y = p(rng.random_range(0.26..5.0), rng.random_range(0.01..10.0));
            let dxy = l2_distance_closed(&x, &y).unwrap();
            let dyx = l2_distance_closed(&y, &x).unwrap();
            assert!(
                (dxy - dyx).abs() <= 1e-5 * dxy.abs() + 1e-12,
                "{dxy} vs {dyx}"
            );
        }
    }

    #[test]
    fn closed_form_handles_extreme_shapes() {
        // Clamped near-Gaussian subbands meet heavy-tailed ones.
        let a = p(1000.0, 1e-4);
        let b = p(0.3, 2.0);
        let d = l2_distance_closed(&a, &b).unwrap();
        assert!(d.is_finite() && d > 0.0);
        let same = l2_distance_closed(&a, &a).unwrap();
        assert!(same < 1e-6);
    }

    #[test]
    fn closed_form_matches_quadrature_at_clamped_shapes() {
        // Shape-clamped bands put the density evaluation at orders near
        // 1000; both routes must still agree.
        let cases = [
            ((1000.0, 1e-3), (800.0, 1.4e-3)),
            ((1000.0, 0.5), (0.5, 2.0)),
            ((1000.0, 2e-4), (1000.0, 3e-4)),
        ];
        for ((a1, b1), (a2, b2)) in cases {
            let x = p(a1, b1);
            let y = p(a2, b2);
            let closed = l2_distance_closed(&x, &y).unwrap();
            let quad = l2_distance_quadrature(&x, &y).unwrap();
            assert!(
                (closed - quad).abs() <= 1e-5 * quad.abs() + 1e-7,
                "({a1},{b1}) vs ({a2},{b2}): closed {closed}, quadrature {quad}"
            );
        }
    }

    #[test]
    fn closed_form_matches_quadrature_at_extreme_scale_ratios() {
        // Scale ratios of 1e4 push the hypergeometric argument to
        // 0.9999; both the connection-formula path (non-integer
        // parameter difference) and the long-series path (integer) must
        // hold up.
        let cases = [
            ((0.7, 1.0), (0.9, 1e-4)),
            ((1.5, 1.0), (0.8, 1e-4)),
            ((0.5, 2.0), (2.0, 1e-3)),
        ];
        for ((a1, b1), (a2, b2)) in cases {
            let x = p(a1, b1);
            let y = p(a2, b2);
            let closed = l2_distance_closed(&x, &y).unwrap();
            let quad = l2_distance_quadrature(&x, &y).unwrap();
            assert!(
                (closed - quad).abs() <= 1e-5 * quad.abs() + 1e-7,
                "({a1},{b1}) vs ({a2},{b2}): closed {closed}, quadrature {quad}"
            );
        }
    }

    #[test]
    fn q5_is_root_sum_of_squares() {
        let b1 = pair((1, 1), (0.8, 1.0), (1.1, 1.4));
        let b2 = pair((1, 2), (1.5, 2.0), (0.9, 0.7));
        let d1 = l2_distance_closed(&b1.reference, &b1.distorted).unwrap();
        let d2 = l2_distance_closed(&b2.reference, &b2.distorted).unwrap();
        let q = q5(&[b1, b2]).unwrap().value;
        assert!((q - d1.hypot(d2)).abs() < 1e-12);

        // Single band: Q5 equals that band's distance.
        let q_single = q5(&[b1]).unwrap().value;
        assert!((q_single - d1).abs() < 1e-12);
    }

    #[test]
    fn q5_falls_back_to_quadrature_when_the_series_cannot_converge() {
        // A 1e10 scale ratio puts the hypergeometric argument within
        // 1e-10 of 1; with c-a-b integral the connection formula does
        // not apply and the closed route refuses. Q5 must still come
        // back, through quadrature, with the same value.
        let x = p(1.5, 1e6);
        let y = p(0.8, 1e-4);
        assert!(matches!(
            l2_distance_closed(&x, &y),
            Err(MetricError::HypergeometricDivergence(_))
        ));
        let via_q5 = q5(&[pair((1, 1), (1.5, 1e6), (0.8, 1e-4))]).unwrap().value;
        let direct = l2_distance_quadrature(&x, &y).unwrap();
        assert!(
            (via_q5 - direct).abs() <= 1e-9,
            "fallback {via_q5} vs quadrature {direct}"
        );
    }

    #[test]
    fn per_band_distance_satisfies_triangle_inequality() {
        let a = p(0.6, 1.0);
        let b = p(0.9, 1.8);
        let c = p(1.4, 0.9);
        let dab = l2_distance_quadrature(&a, &b).unwrap();
        let dbc = l2_distance_quadrature(&b, &c).unwrap();
        let dac = l2_distance_quadrature(&a, &c).unwrap();
        assert!(dac <= dab + dbc + 1e-7, "{dac} > {dab} + {dbc}");
    }

    #[test]
    fn q2_q4_q5_strictly_increase_in_scale_drift() {
        // Fixed shape, β_d walking away from β_r on a 20-point grid.
        let mut prev = [0.0f64; 3];
        for k in 1..=20 {
            let bd = 1.0 + 0.15 * k as f64;
            let bands = [pair((1, 1), (0.9, 1.0), (0.9, bd))];
            let cur = [
                q2(&bands).unwrap().value,
                q4(&bands).unwrap().value,
                q5(&bands).unwrap().value,
            ];
            if k > 1 {
                for (i, name) in ["q2", "q4", "q5"].iter().enumerate() {
                    assert!(
                        cur[i] > prev[i],
                        "{name} not increasing at step {k}: {} <= {}",
                        cur[i],
                        prev[i]
                    );
                }
            }
            prev = cur;
        }
    }
}
