//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite
/// sign. Stops when the bracket is narrower than `x_tol` or no longer
/// shrinks in floating point.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::NonConvergence(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid <= lo.min(hi) || mid >= hi.max(lo) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve `g(x) = target` for a strictly increasing `g` on `[lo, hi]`.
pub fn invert_increasing<F: FnMut(f64) -> f64>(
    mut g: F,
    target: f64,
    lo: f64,
    hi: f64,
    x_tol: f64,
) -> Result<f64> {
    bisect(|x| g(x) - target, lo, hi, x_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn inverts_monotone_map() {
        let x = invert_increasing(|b| b / (1.0 - b), 0.25, 0.0, 0.99, 1e-15).unwrap();
        assert!((x - 0.2).abs() < 1e-14);
    }
}
