//! Jump relations: the steady conjugate-state map, shock speed and the Lax
//! entropy test.

use crate::eos::{sonic_density, FlowPoint, PressureLaw};
use crate::error::{Error, Result};
use crate::numerics::roots::newton_bisect;

/// States on both sides of a shock together with its speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPair {
    pub upstream: FlowPoint,
    pub downstream: FlowPoint,
    pub shock_speed: f64,
}

/// Subsonic density `𝔰(ρ) ≥ ρ_s` sharing the momentum flux `p + J²/ρ` with the
/// supersonic density `rho_sup`.
pub fn conjugate_state(law: &PressureLaw, j: f64, rho_sup: f64) -> Result<f64> {
    let rho_s = sonic_density(law, j)?;
    conjugate_state_with_sonic(law, j, rho_sup, rho_s)
}

pub(crate) fn conjugate_state_with_sonic(law: &PressureLaw, j: f64, rho_sup: f64, rho_s: f64) -> Result<f64> {
    if !(rho_sup > 0.0) || rho_sup > rho_s {
        return Err(Error::Domain(format!("conjugate_state needs 0 < rho <= rho_s = {rho_s}, got {rho_sup}")));
    }
    if rho_sup == rho_s {
        return Ok(rho_s);
    }
    let target = law.momentum_flux(rho_sup, j);
    let f = |r: f64| (law.momentum_flux(r, j) - target, law.sonic_gap(r, j));
    let mut hi = 2.0 * rho_s;
    while f(hi).0 < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::SolverFailure { what: "conjugate_state", lo: rho_s, hi });
        }
    }
    // On (ρ_s, ∞) the flux is increasing, and below its value at ρ_sup at ρ_s.
    let root = newton_bisect(f, rho_s, hi, 2e-13 * target, 0.0, "conjugate_state")?;
    Ok(root)
}

/// `d𝔰/dρ = (p′(ρ) − J²/ρ²)/(p′(𝔰) − J²/𝔰²)`, negative for supersonic ρ.
pub fn conjugate_derivative(law: &PressureLaw, j: f64, rho_sup: f64) -> Result<f64> {
    let rho_s = sonic_density(law, j)?;
    if rho_sup >= rho_s * (1.0 - crate::eos::DEFAULT_SONIC_BAND) {
        return Err(Error::Singularity { x: f64::NAN, rho: rho_sup });
    }
    let s = conjugate_state_with_sonic(law, j, rho_sup, rho_s)?;
    Ok(law.sonic_gap(rho_sup, j) / law.sonic_gap(s, j))
}

/// Result of [`shock_speed`]: the mass-flux speed and the mismatch of the
/// momentum jump relation at that speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSpeed {
    pub speed: f64,
    /// `|[p + ρu²] − s [ρu]|`.
    pub momentum_inconsistency: f64,
}

/// Shock speed `s = [ρu]/[ρ]` between two states (fluxes taken from each
/// point's own `J`).
pub fn shock_speed(law: &PressureLaw, left: &FlowPoint, right: &FlowPoint) -> Result<ShockSpeed> {
    if left.rho == right.rho {
        return Err(Error::DegenerateJump { rho: left.rho });
    }
    let m_l = left.rho * left.u();
    let m_r = right.rho * right.u();
    let s = (m_r - m_l) / (right.rho - left.rho);
    let mom = |p: &FlowPoint| law.p(p.rho) + p.rho * p.u() * p.u();
    let inconsistency = ((mom(right) - mom(left)) - s * (m_r - m_l)).abs();
    Ok(ShockSpeed { speed: s, momentum_inconsistency: inconsistency })
}

/// Lax condition `(u−c)_L > s > (u−c)_R` and `(u+c)_R > s`, strict.
pub fn is_entropy_admissible(law: &PressureLaw, left: &FlowPoint, right: &FlowPoint, speed: f64) -> bool {
    let cl = law.sound_speed(left.rho);
    let cr = law.sound_speed(right.rho);
    left.u() - cl > speed && speed > right.u() - cr && right.u() + cr > speed
}
