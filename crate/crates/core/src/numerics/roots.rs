//! Bracketed scalar root finders.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a bracket `[lo, hi]` with a sign change.
///
/// `f` returns the value and derivative. A Newton iterate that leaves the
/// current bracket, or fails to halve the residual, is replaced by a bisection
/// step. Stops when `|f| <= ftol` or the bracket is narrower than `xtol`.
pub fn newton_bisect<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure { what, lo, hi });
    }
    let increasing = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut last_abs = f64::INFINITY;
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        if (hi - lo).abs() <= xtol {
            return Ok(x);
        }
        let newton = x - fx / dfx;
        let in_bracket = newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi);
        x = if in_bracket && fx.abs() < 0.5 * last_abs { newton } else { 0.5 * (lo + hi) };
        last_abs = fx.abs();
    }
    Err(Error::SolverFailure { what, lo, hi })
}

/// Plain bisection on `[lo, hi]` for a function with a sign change. Stops
/// when both `|f(mid)| <= ftol` and the bracket is narrower than `xtol`, or
/// when the bracket cannot shrink further in floating point.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure { what, lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() <= ftol && (hi - lo).abs() <= xtol {
            return Ok(mid);
        }
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Ok(mid);
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::SolverFailure { what, lo, hi })
}
