//! Confidence radii used to calibrate the number of blocks.
//!
//! Each radius is evaluated exactly as stated for its result, including the
//! asymmetry between the first terms of [`radius_g`] (denominator `a n`) and
//! [`radius_f`] (denominator `a n / Q`). Hard errors are raised only where a
//! formula is undefined; the side conditions under which a radius is a valid
//! confidence bound are reported separately by the `*_violations` helpers.

use serde::{Deserialize, Serialize};

use super::lambert::lambert_w0_exp;
use crate::error::{Error, Result};

/// Parameters of `P(B(x, r)) >= min(1, a r^b)` on the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardCondition {
    pub a: f64,
    pub b: f64,
}

impl StandardCondition {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter { name: "a".into(), value: a.to_string() });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter { name: "b".into(), value: b.to_string() });
        }
        Ok(Self { a, b })
    }

    /// `a = 1`, `b` = ambient dimension.
    pub fn for_dimension(d: usize) -> Self {
        Self { a: 1.0, b: d as f64 }
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_pigeonhole(q: usize, m: usize) -> Result<()> {
    if q <= 2 * m {
        return Err(Error::PigeonholeViolated { q, two_m: 2 * m });
    }
    Ok(())
}

fn check_outliers(n: usize, m: usize) -> Result<()> {
    if m >= n {
        return Err(Error::Constraint(format!("m < n (m = {m}, n = {n})")));
    }
    Ok(())
}

/// Sublevel-filtration radius
/// `(Q log(n/Q) / (a n) + 4 Q log(1/δ) / (a (Q - 2m) n))^(1/b)`.
pub fn radius_g(n: usize, q: usize, m: usize, delta: f64, ab: StandardCondition) -> Result<f64> {
    check_pigeonhole(q, m)?;
    check_unit_interval("delta", delta)?;
    let (n, q, m) = (n as f64, q as f64, m as f64);
    let inner = q * (n / q).ln() / (ab.a * n) + 4.0 * q * (1.0 / delta).ln() / (ab.a * (q - 2.0 * m) * n);
    Ok(inner.powf(1.0 / ab.b))
}

pub fn radius_g_violations(n: usize, q: usize, delta: f64, ab: StandardCondition) -> Vec<String> {
    let mut v = Vec::new();
    if q >= n {
        v.push(format!("Q < n (Q = {q}, n = {n})"));
    }
    let bound = (-(1.0 + ab.b) * q as f64).exp();
    if !(delta < bound) {
        v.push(format!("delta < exp(-(1+b)Q) = {bound:e} (delta = {delta})"));
    }
    v
}

/// Weighted-filtration radius: a MoM term with first denominator `a (n/Q)`
/// plus an inlier term in `n - m`.
pub fn radius_f(n: usize, m: usize, q: usize, delta1: f64, delta2: f64, ab: StandardCondition) -> Result<f64> {
    check_pigeonhole(q, m)?;
    check_outliers(n, m)?;
    check_unit_interval("delta1", delta1)?;
    check_unit_interval("delta2", delta2)?;
    let (nf, qf, mf) = (n as f64, q as f64, m as f64);
    let first =
        qf * (nf / qf).ln() / (ab.a * (nf / qf)) + 4.0 * qf * (1.0 / delta1).ln() / (ab.a * (qf - 2.0 * mf) * nf);
    let k = nf - mf;
    let second = k.ln() / (ab.a * k) + 4.0 * (1.0 / delta2).ln() / (ab.a * k);
    Ok(first.powf(1.0 / ab.b) + second.powf(1.0 / ab.b))
}

pub fn radius_f_violations(n: usize, q: usize, delta1: f64, delta2: f64, ab: StandardCondition) -> Vec<String> {
    let mut v = Vec::new();
    if q >= n {
        v.push(format!("Q < n (Q = {q}, n = {n})"));
    }
    let bound = (-(1.0 + ab.b) * q as f64).exp();
    if !(delta1 <= bound) {
        v.push(format!("delta1 <= exp(-(1+b)Q) = {bound:e} (delta1 = {delta1})"));
    }
    if !(delta1 + delta2 < 1.0) {
        v.push(format!("delta1 + delta2 < 1 (sum = {})", delta1 + delta2));
    }
    v
}

/// `delta - exp(-(1+b)(2 m_max + 1))`.
pub fn delta_max(delta: f64, m_max: usize, ab: StandardCondition) -> f64 {
    delta - (-(1.0 + ab.b) * (2 * m_max + 1) as f64).exp()
}

/// Lepski radius for the weighted pipeline.
pub fn radius_h(n: usize, m: usize, delta: f64, m_max: usize, ab: StandardCondition) -> Result<f64> {
    check_unit_interval("delta", delta)?;
    check_outliers(n, m)?;
    let dm = delta_max(delta, m_max, ab);
    if !(dm > 0.0) {
        return Err(Error::DeltaTooSmall(dm));
    }
    let (nf, q, k) = (n as f64, (2 * m + 1) as f64, (n - m) as f64);
    // W(n e^{4(1+b)(2 m_max + 1)} / (2m + 1)) overflows any float argument; go through logs
    let w1 = lambert_w0_exp(nf.ln() + 4.0 * (1.0 + ab.b) * (2 * m_max + 1) as f64 - q.ln())?;
    let w2 = lambert_w0_exp(k.ln() + 4.0 * (1.0 / dm).ln())?;
    Ok(2.0 * (q / (ab.a * nf) * w1).powf(1.0 / ab.b) + (w2 / (ab.a * k)).powf(1.0 / ab.b))
}

/// Lepski radius for the sublevel pipeline.
pub fn radius_p(n: usize, m: usize, delta: f64, ab: StandardCondition) -> Result<f64> {
    check_unit_interval("delta", delta)?;
    let (nf, q) = (n as f64, (2 * m + 1) as f64);
    let w = lambert_w0_exp(nf.ln() + (1.0 + ab.b) * (1.0 / delta).ln() - q.ln())?;
    Ok((q / (ab.a * nf) * w).powf(1.0 / ab.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::lambert_w0;

    const AB1: StandardCondition = StandardCondition { a: 1.0, b: 1.0 };

    #[test]
    fn g_single_block() {
        let g = radius_g(1000, 1, 0, (-2.0f64).exp(), AB1).unwrap();
        let expected = 1000f64.ln() / 1000.0 + 8.0 / 1000.0;
        assert!((g - expected).abs() < 1e-15);
    }

    #[test]
    fn g_pigeonhole_and_growth() {
        let ab = StandardCondition { a: 1.0, b: 2.0 };
        assert!(matches!(radius_g(100, 10, 5, 0.1, ab), Err(Error::PigeonholeViolated { q: 10, two_m: 10 })));
        let near = radius_g(100, 11, 5, 0.1, ab).unwrap();
        let far = radius_g(100, 11, 1, 0.1, ab).unwrap();
        assert!(near > far);
    }

    #[test]
    fn homogeneity_in_a() {
        let ab = StandardCondition { a: 1.0, b: 3.0 };
        let ab2 = StandardCondition { a: 2.0, b: 3.0 };
        let s = 2f64.powf(-1.0 / 3.0);
        let g = (radius_g(500, 21, 10, 1e-3, ab).unwrap(), radius_g(500, 21, 10, 1e-3, ab2).unwrap());
        assert!((g.1 - s * g.0).abs() < 1e-14 * g.0);
        let h = (radius_h(500, 50, 0.1, 200, ab).unwrap(), radius_h(500, 50, 0.1, 200, ab2).unwrap());
        assert!((h.1 - s * h.0).abs() < 1e-13 * h.0);
        let p = (radius_p(500, 50, 0.1, ab).unwrap(), radius_p(500, 50, 0.1, ab2).unwrap());
        assert!((p.1 - s * p.0).abs() < 1e-13 * p.0);
    }

    #[test]
    fn f_reduces_for_single_block() {
        let (d1, d2) = (0.05, 0.05);
        let f = radius_f(400, 0, 1, d1, d2, AB1).unwrap();
        let n = 400f64;
        let expected = n.ln() / n + 4.0 * (1.0 / d1).ln() / n + n.ln() / n + 4.0 * (1.0 / d2).ln() / n;
        assert!((f - expected).abs() < 1e-14);
        assert!(radius_f(400, 0, 1, 0.0, d2, AB1).is_err());
        assert!(radius_f(400, 3, 6, d1, d2, AB1).is_err());
    }

    #[test]
    fn p_without_outliers() {
        let (n, delta) = (300usize, 0.2f64);
        let ab = StandardCondition { a: 1.5, b: 2.0 };
        let direct = (lambert_w0(n as f64 * delta.powf(-(1.0 + ab.b))).unwrap() / (ab.a * n as f64)).sqrt();
        assert!((radius_p(n, 0, delta, ab).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn h_needs_room_for_delta() {
        let ab = StandardCondition { a: 1.0, b: 1.0 };
        // exp(-2 * 3) = 0.0025 for m_max = 1
        assert!(matches!(radius_h(100, 1, 0.002, 1, ab), Err(Error::DeltaTooSmall(_))));
        assert!(radius_h(100, 1, 0.01, 1, ab).is_ok());
    }

    #[test]
    fn h_and_p_nondecreasing_in_m() {
        let ab = StandardCondition { a: 1.0, b: 2.0 };
        let h: Vec<f64> = (0..200).map(|m| radius_h(500, m, 0.1, 200, ab).unwrap()).collect();
        let p: Vec<f64> = (0..200).map(|m| radius_p(500, m, 0.1, ab).unwrap()).collect();
        assert!(h.windows(2).all(|w| w[1] >= w[0]));
        assert!(p.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn violations_are_reported() {
        let ab = StandardCondition { a: 1.0, b: 1.0 };
        assert_eq!(radius_g_violations(100, 3, 1e-9, ab).len(), 0);
        assert_eq!(radius_g_violations(100, 3, 0.1, ab).len(), 1);
        assert_eq!(radius_f_violations(10, 10, 0.5, 0.6, ab).len(), 3);
    }
}
