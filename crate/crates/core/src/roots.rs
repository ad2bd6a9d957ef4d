//! Scalar bracketing root finder shared by grid grading, the exterior grid
//! and the strange-term solver.

use crate::error::{Error, Result};

/// Outcome of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub iterations: usize,
    /// Width of the final bracket.
    pub width: f64,
}

/// Bisection on `[lo, hi]` for a continuous `f` with `f(lo)` and `f(hi)` of
/// opposite sign. Stops once the bracket is no wider than `tol` or an exact
/// zero is hit.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bisection needs lo < hi and tol > 0 (got [{lo}, {hi}], tol {tol})"
        )));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Bisection { root: lo, iterations: 0, width: 0.0 });
    }
    if f_hi == 0.0 {
        return Ok(Bisection { root: hi, iterations: 0, width: 0.0 });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::BracketFailure { lo, hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == max_iter {
            return Err(Error::NoConvergence {
                solver: "bisection",
                iterations,
                residual: hi - lo,
            });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(Bisection { root: mid, iterations, width: 0.0 });
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection {
        root: 0.5 * (lo + hi),
        iterations,
        width: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let b = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12, 200).unwrap();
        assert!((b.root - 2f64.sqrt()).abs() < 1e-12);
        assert!(b.width <= 1e-12);
    }

    #[test]
    fn decreasing_function() {
        let b = bisect(|x| Ok(1.0 - x), 0.0, 3.0, 1e-10, 200).unwrap();
        assert!((b.root - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_midpoint_stops_early() {
        let b = bisect(|x| Ok(x - 0.5), 0.0, 1.0, 1e-14, 200).unwrap();
        assert_eq!(b.root, 0.5);
        assert_eq!(b.iterations, 1);
    }

    #[test]
    fn same_sign_is_bracket_failure() {
        let e = bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-8, 100).unwrap_err();
        assert!(matches!(e, Error::BracketFailure { .. }));
    }
}
