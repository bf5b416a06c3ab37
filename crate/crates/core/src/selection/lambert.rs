//! Principal branch of the Lambert W function on `[0, inf)`.

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;

/// `W0(z)`: the `w >= 0` with `w e^w = z`. Halley iteration started at `ln(1 + z)`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::OutOfDomain(format!("lambert_w0 needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if z > 1e250 {
        // w e^w would overflow during the iteration
        return Ok(solve_log_form(z.ln()));
    }
    let mut w = z.ln_1p();
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// `W0(e^l)` without forming `e^l`, so arguments far beyond `f64::MAX` are fine.
/// Solves `w + ln w = l` by Newton's method for large `l`.
pub fn lambert_w0_exp(l: f64) -> Result<f64> {
    if l.is_nan() {
        return Err(Error::OutOfDomain("lambert_w0_exp of NaN".into()));
    }
    if l < 600.0 {
        return lambert_w0(l.exp());
    }
    if l.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(solve_log_form(l))
}

/// Newton's method on `w + ln w = l`, for `l` large.
fn solve_log_form(l: f64) -> f64 {
    let mut w = l - l.ln();
    for _ in 0..MAX_ITER {
        let step = (w + w.ln() - l) / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}
