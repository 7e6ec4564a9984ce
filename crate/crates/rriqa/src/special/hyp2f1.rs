//! Gauss hypergeometric function ₂F₁(a, b; c; z) on the real line, z ≤ 1.

use super::gamma::ln_gamma_signed;
use super::SpecialError;

const EPS: f64 = 1e-16;
const SERIES_BUDGET: usize = 5_000_000;
const NEAR_ONE: f64 = 0.995;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.trunc()
}

/// ₂F₁(a, b; c; z) by the Gauss series, with Pfaff's transformation for
/// z < 0 and the 1−z connection formula near z = 1.
///
/// Supported domain: z ≤ 1 (z = 1 requires c − a − b > 0), c not a
/// non-positive integer. Relative accuracy is ~1e-12 where the series or a
/// transformation applies directly.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, SpecialError> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(SpecialError::DomainError(
            "hyp2f1 requires finite arguments".into(),
        ));
    }
    if is_nonpositive_integer(c) {
        return Err(SpecialError::DomainError(format!(
            "hyp2f1 pole: c = {c} is a non-positive integer"
        )));
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    // Polynomial case: the series terminates before any c-pole matters.
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        let n_terms = (-a.min(b)) as usize + 1;
        return gauss_series(a, b, c, z, n_terms + 1);
    }
    if z > 1.0 {
        return Err(SpecialError::DomainError(format!(
            "hyp2f1 argument z = {z} lies beyond the branch point"
        )));
    }
    if z == 1.0 {
        let s = c - a - b;
        if s <= 0.0 {
            return Err(SpecialError::DomainError(format!(
                "hyp2f1 diverges at z = 1 when c - a - b = {s} <= 0"
            )));
        }
        return gamma_ratio(&[c, s], &[c - a, c - b])
            .ok_or_else(|| SpecialError::DomainError("gamma pole in Gauss summation".into()));
    }
    if z < 0.0 {
        // Pfaff: F(a,b;c;z) = (1-z)^{-a} F(a, c-b; c; z/(z-1)),
        // mapping z < 0 into (0, 1). Put the smaller parameter in the
        // exponent to keep the prefactor tame.
        let (a, b) = if a.abs() <= b.abs() { (a, b) } else { (b, a) };
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * hyp2f1(a, c - b, c, w)?);
    }

    if z > NEAR_ONE {
        if let Some(res) = connection_near_one(a, b, c, z) {
            return res;
        }
    }
    gauss_series(a, b, c, z, SERIES_BUDGET)
}

// Plain Gauss series with Kahan compensation.
fn gauss_series(a: f64, b: f64, c: f64, z: f64, budget: usize) -> Result<f64, SpecialError> {
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut term = 1.0f64;
    for n in 0..budget {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        if !term.is_finite() {
            return Err(SpecialError::NoConvergence(format!(
                "hyp2f1 series term overflow at n = {n}"
            )));
        }
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term == 0.0 || term.abs() <= EPS * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecialError::NoConvergence(format!(
        "hyp2f1 series did not converge within {budget} terms (z = {z})"
    )))
}

// DLMF 15.8.4, valid when s = c - a - b is not an integer. Applied only
// when the auxiliary series at argument 1 - z stay small, since large
// parameters make the two branches cancel catastrophically.
fn connection_near_one(a: f64, b: f64, c: f64, z: f64) -> Option<Result<f64, SpecialError>> {
    let s = c - a - b;
    let u = 1.0 - z;
    if (s - s.round()).abs() < 0.05 {
        return None;
    }
    let growth = a.abs().max(b.abs()).max((c - a).abs()).max((c - b).abs());
    if growth * u > 2.0 {
        return None;
    }
    let coef1 = gamma_ratio(&[c, s], &[c - a, c - b]);
    let coef2 = gamma_ratio(&[c, -s], &[a, b]);
    let (coef1, coef2) = (coef1?, coef2?);
    let f1 = match gauss_series(a, b, 1.0 - s, u, 100_000) {
        Ok(v) => v,
        Err(e) => return Some(Err(e)),
    };
    let f2 = match gauss_series(c - a, c - b, 1.0 + s, u, 100_000) {
        Ok(v) => v,
        Err(e) => return Some(Err(e)),
    };
    Some(Ok(coef1 * f1 + coef2 * u.powf(s) * f2))
}

// exp(Σ ln Γ(num) - Σ ln Γ(den)) with signs; a pole in the denominator
// yields 0, a pole in the numerator yields None.
fn gamma_ratio(nums: &[f64], dens: &[f64]) -> Option<f64> {
    let mut ln_acc = 0.0;
    let mut sign = 1.0;
    for &x in nums {
        if is_nonpositive_integer(x) {
            return None;
        }
        let (l, s) = ln_gamma_signed(x);
        ln_acc += l;
        sign *= s;
    }
    for &x in dens {
        if is_nonpositive_integer(x) {
            return Some(0.0);
        }
        let (l, s) = ln_gamma_signed(x);
        ln_acc -= l;
        sign *= s;
    }
    Some(sign * ln_acc.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64, ctx: &str) {
        assert!(
            (a - b).abs() <= tol * b.abs().max(1e-300),
            "{ctx}: {a} vs {b}"
        );
    }

    #[test]
    fn empty_series_is_one() {
        assert_eq!(hyp2f1(0.7, 1.9, 2.4, 0.0).unwrap(), 1.0);
        assert_eq!(hyp2f1(0.0, 1.9, 2.4, 0.6).unwrap(), 1.0);
    }

    #[test]
    fn log_identity() {
        // F(1, 1; 2; z) = -ln(1-z)/z; the classical reduction.
        for &z in &[0.5, 0.9, -0.7, -3.0, 0.999] {
            let expect = -(1.0f64 - z).ln() / z;
            let got = hyp2f1(1.0, 1.0, 2.0, z).unwrap();
            rel_close(got, expect, 1e-12, &format!("F(1,1;2;{z})"));
        }
        // The classical value at z = 0.5 is 2 ln 2.
        rel_close(
            hyp2f1(1.0, 1.0, 2.0, 0.5).unwrap(),
            2.0 * std::f64::consts::LN_2,
            1e-12,
            "2 ln 2",
        );
    }

    #[test]
    fn binomial_identity() {
        // F(a, b; b; z) = (1-z)^{-a} for any b (series telescopes).
        for &(a, z) in &[(0.7, 0.4), (2.3, -1.5), (1.1, 0.99)] {
            let expect = (1.0f64 - z).powf(-a);
            let got = hyp2f1(a, 5.5, 5.5, z).unwrap();
            rel_close(got, expect, 1e-11, &format!("F({a},b;b;{z})"));
        }
    }

    #[test]
    fn catalan_identity() {
        // F(1, 1/2; 2; z) = 2(1 - √(1-z))/z via the Catalan generating function.
        for &z in &[0.5, 0.875, 0.2] {
            let expect = 2.0 * (1.0 - (1.0f64 - z).sqrt()) / z;
            let got = hyp2f1(1.0, 0.5, 2.0, z).unwrap();
            rel_close(got, expect, 1e-12, &format!("F(1,1/2;2;{z})"));
        }
    }

    #[test]
    fn parameter_symmetry() {
        for &(a, b, c, z) in &[
            (0.4, 2.7, 3.2, 0.8),
            (1.9, 0.5, 2.4, -2.0),
            (0.26, 0.5, 0.52, 0.875),
        ] {
            let ab = hyp2f1(a, b, c, z).unwrap();
            let ba = hyp2f1(b, a, c, z).unwrap();
            rel_close(ab, ba, 1e-12, "a <-> b symmetry");
        }
    }

    #[test]
    fn gauss_summation_at_one() {
        // F(a,b;c;1) = Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b)); cross-check against
        // the series just below 1 (converges since c-a-b > 0).
        let (a, b, c) = (0.3, 0.5, 2.0);
        let at_one = hyp2f1(a, b, c, 1.0).unwrap();
        let near_one = hyp2f1(a, b, c, 1.0 - 1e-9).unwrap();
        rel_close(near_one, at_one, 1e-6, "continuity at z=1");
    }

    #[test]
    fn near_one_connection_matches_series() {
        // s = c-a-b = 0.7 is safely non-integer: both paths must agree.
        let (a, b, c) = (0.8, 0.5, 2.0);
        let z = 0.9993;
        let direct = gauss_series(a, b, c, z, SERIES_BUDGET).unwrap();
        let via_connection = connection_near_one(a, b, c, z).unwrap().unwrap();
        rel_close(via_connection, direct, 1e-10, "15.8.4 vs series");
    }

    #[test]
    fn terminating_polynomial() {
        // F(-2, b; c; z) = 1 - 2bz/c + b(b+1)z²/(c(c+1)).
        let (b, c, z) = (1.7, 2.2, 0.8);
        let expect = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
        rel_close(hyp2f1(-2.0, b, c, z).unwrap(), expect, 1e-14, "terminating");
    }

    #[test]
    fn domain_errors() {
        assert!(hyp2f1(0.5, 0.5, -1.0, 0.3).is_err());
        assert!(hyp2f1(0.5, 0.5, 1.0, 1.5).is_err());
        // Divergent at z = 1 when c - a - b <= 0.
        assert!(hyp2f1(1.0, 1.0, 1.5, 1.0).is_err());
    }
}
