//! Boundary observability: the trace of `(Y_t, Y_x)` at `x₀` over a time
//! window bounds the interior energy in the middle of the window.

use super::EnergyLedger;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ObservabilityOptions {
    /// Weight of the zero-order boundary term subtracted from the interior side.
    pub c3: f64,
    /// Half-width of the interior window as a fraction of `T_obs`.
    pub half_window: f64,
}

impl Default for ObservabilityOptions {
    fn default() -> Self {
        Self { c3: 0.0, half_window: 0.125 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityResult {
    /// `∫₀^T (Y_t² + Y_x²)(t, x₀) dt`.
    pub lhs: f64,
    /// `∫_{T/2−δ}^{T/2+δ} φ₀ dt − c₃ ∫₀^T Y(t, x₀)² dt`.
    pub rhs: f64,
    pub ratio: f64,
    pub zero_data: bool,
}

/// Trapezoid integral of `f(sample)` over samples with `a ≤ t ≤ b`, with the
/// end pieces interpolated linearly.
fn integrate_window<F: Fn(usize) -> f64>(times: &[f64], f: F, a: f64, b: f64) -> f64 {
    let mut s = 0.0;
    for i in 1..times.len() {
        let (t0, t1) = (times[i - 1], times[i]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let (f0, f1) = (f(i - 1), f(i));
        let at = |t: f64| f0 + (f1 - f0) * (t - t0) / (t1 - t0);
        s += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    s
}

/// Evaluates the observability ratio on `[0, t_obs]` of a linear run.
pub fn observability_check(ledger: &EnergyLedger, zeta_l: f64, t_obs: f64, opts: &ObservabilityOptions) -> Result<ObservabilityResult> {
    if t_obs < 2.0 * zeta_l {
        return Err(Error::Usage(format!("T_obs = {t_obs} is shorter than 2 zeta_L = {}", 2.0 * zeta_l)));
    }
    let t_end = ledger.times.last().copied().unwrap_or(0.0);
    if t_end + 1e-9 < t_obs {
        return Err(Error::Usage(format!("run ends at {t_end}, before T_obs = {t_obs}")));
    }
    let t = &ledger.times;
    let lhs = integrate_window(t, |i| ledger.yt_x0[i].powi(2) + ledger.yx_x0[i].powi(2), 0.0, t_obs);
    let delta = opts.half_window * t_obs;
    let interior = integrate_window(t, |i| ledger.phi[0][i], 0.5 * t_obs - delta, 0.5 * t_obs + delta);
    let zero_order = integrate_window(t, |i| ledger.y_x0[i].powi(2), 0.0, t_obs);
    let rhs = interior - opts.c3 * zero_order;
    if lhs == 0.0 && rhs == 0.0 {
        return Ok(ObservabilityResult { lhs, rhs, ratio: 1.0, zero_data: true });
    }
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    Ok(ObservabilityResult { lhs, rhs, ratio, zero_data: false })
}
