//! Dormand–Prince 5(4) integrator with local error control.
//!
//! Steps are clipped so that every requested output abscissa is hit exactly;
//! no interpolation is involved in the returned samples.

use crate::error::{Error, Result};

/// Tolerances and step limits for [`integrate_to_grid`].
#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial trial step; `None` picks a fraction of the interval.
    pub h_init: Option<f64>,
    /// Smallest admissible step, relative to the integration interval.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, h_init: None, h_min_rel: 1e-13, max_steps: 5_000_000 }
    }
}

impl RkOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One attempted step. Returns the fifth-order update, the scaled error
/// norm, and the derivative at the new point (first-same-as-last).
fn try_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &RkOptions,
) -> Result<([f64; N], f64, [f64; N])>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(x + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let ynew = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(x + h, &ynew)?;
    let mut acc = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
        acc += (e / sc).powi(2);
    }
    Ok((ynew, (acc / N as f64).sqrt(), k7))
}

/// Integrates `y' = f(x, y)` and returns the solution at every abscissa of
/// `grid` (which must be strictly monotone; decreasing grids integrate
/// backwards). `grid[0]` is the initial abscissa.
///
/// An `Err` from `f` at a trial stage shrinks the step; once the step falls
/// below the floor the last such error is returned, so a right-hand side that
/// refuses to be evaluated (a sonic guard, say) surfaces with its own context.
pub fn integrate_to_grid<const N: usize, F>(
    mut f: F,
    grid: &[f64],
    y0: [f64; N],
    opts: &RkOptions,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    assert!(grid.len() >= 1, "empty output grid");
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0);
    if grid.len() == 1 {
        return Ok(out);
    }
    let span = grid[grid.len() - 1] - grid[0];
    let dir = span.signum();
    let h_min = opts.h_min_rel * span.abs().max(1e-300);
    let mut x = grid[0];
    let mut y = y0;
    let mut k1 = f(x, &y)?;
    let mut h = opts.h_init.unwrap_or(1e-3 * span.abs()).abs() * dir;
    let mut steps = 0usize;
    for &target in &grid[1..] {
        while (target - x) * dir > 0.0 {
            let remaining = target - x;
            let mut hs = h;
            let clipped = hs.abs() >= remaining.abs();
            if clipped {
                hs = remaining;
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow { x });
            }
            match try_step(&mut f, x, &y, &k1, hs, opts) {
                Ok((ynew, err, k7)) if err <= 1.0 => {
                    x = if clipped { target } else { x + hs };
                    y = ynew;
                    k1 = k7;
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // A clipped step says nothing about the natural step size.
                    if !clipped || fac < 1.0 {
                        h = hs * fac;
                    }
                }
                Ok((_, err, _)) => {
                    h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                    if h.abs() < h_min {
                        return Err(Error::StepUnderflow { x });
                    }
                }
                Err(e) => {
                    h = hs * 0.25;
                    if h.abs() < h_min {
                        return Err(e);
                    }
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Convenience wrapper returning only the state at `x1`.
pub fn integrate_to<const N: usize, F>(f: F, x0: f64, x1: f64, y0: [f64; N], opts: &RkOptions) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if x0 == x1 {
        return Ok(y0);
    }
    Ok(integrate_to_grid(f, &[x0, x1], y0, opts)?[1])
}

/// Classical fixed-step RK4, used as an independent reference in tests and
/// for short local re-integrations where the step is known to be tiny.
pub fn rk4_fixed<const N: usize, F>(mut f: F, x0: f64, x1: f64, y0: [f64; N], n: usize) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let h = (x1 - x0) / n as f64;
    let mut y = y0;
    for s in 0..n {
        let x = x0 + s as f64 * h;
        let k1 = f(x, &y)?;
        let k2 = f(x + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]))?;
        let k3 = f(x + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]))?;
        let k4 = f(x + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(&y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    }
    Ok(y)
}
