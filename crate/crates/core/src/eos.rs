//! Pressure laws, sonic state and flow-regime classification.

use crate::error::{Error, Result};
use crate::numerics::roots::newton_bisect;

/// Barotropic pressure law `p(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `p = k ρ^γ` with `k > 0`, `γ ≥ 1`.
    GammaLaw { k: f64, gamma: f64 },
    /// `p = k ρ`. Here `p′(0) = k ≠ 0`, so the law carries `relaxed_origin`.
    Isothermal { k: f64 },
}

impl PressureLaw {
    pub fn gamma_law(k: f64, gamma: f64) -> Result<Self> {
        let law = PressureLaw::GammaLaw { k, gamma };
        law.validate()?;
        Ok(law)
    }

    pub fn isothermal(k: f64) -> Result<Self> {
        let law = PressureLaw::Isothermal { k };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PressureLaw::GammaLaw { k, gamma } => {
                if !(k > 0.0 && k.is_finite()) || !(gamma >= 1.0 && gamma.is_finite()) {
                    return Err(Error::Domain(format!("gamma law needs k > 0 and gamma >= 1 (k = {k}, gamma = {gamma})")));
                }
            }
            PressureLaw::Isothermal { k } => {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::Domain(format!("isothermal law needs k > 0 (k = {k})")));
                }
            }
        }
        Ok(())
    }

    /// True when `p′(0) ≠ 0`, i.e. the law is outside the strict origin
    /// assumption `p(0) = p′(0) = 0`.
    pub fn relaxed_origin(&self) -> bool {
        match *self {
            PressureLaw::GammaLaw { gamma, .. } => gamma == 1.0,
            PressureLaw::Isothermal { .. } => true,
        }
    }

    pub fn p(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::GammaLaw { k, gamma } => k * rho.powf(gamma),
            PressureLaw::Isothermal { k } => k * rho,
        }
    }

    pub fn dp(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::GammaLaw { k, gamma } => k * gamma * rho.powf(gamma - 1.0),
            PressureLaw::Isothermal { k } => k,
        }
    }

    pub fn ddp(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::GammaLaw { k, gamma } => {
                if gamma == 1.0 {
                    0.0
                } else {
                    k * gamma * (gamma - 1.0) * rho.powf(gamma - 2.0)
                }
            }
            PressureLaw::Isothermal { .. } => 0.0,
        }
    }

    /// Sound speed `c = √p′(ρ)`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dp(rho).sqrt()
    }

    /// `p′(ρ) − J²/ρ²`: positive in subsonic states, negative in supersonic.
    pub fn sonic_gap(&self, rho: f64, j: f64) -> f64 {
        self.dp(rho) - j * j / (rho * rho)
    }

    /// Derivative of [`Self::sonic_gap`] in ρ.
    pub fn sonic_gap_derivative(&self, rho: f64, j: f64) -> f64 {
        self.ddp(rho) + 2.0 * j * j / (rho * rho * rho)
    }

    /// Momentum flux `p(ρ) + J²/ρ` at fixed mass flux.
    pub fn momentum_flux(&self, rho: f64, j: f64) -> f64 {
        self.p(rho) + j * j / rho
    }

    /// `p(ρ + δ) − p(ρ)` without cancellation for small δ.
    pub fn pressure_increment(&self, rho: f64, delta: f64) -> f64 {
        match *self {
            PressureLaw::GammaLaw { k, gamma } => k * rho.powf(gamma) * (gamma * (delta / rho).ln_1p()).exp_m1(),
            PressureLaw::Isothermal { k } => k * delta,
        }
    }

    /// `𝒫(ρ + δ, J − v) − 𝒫(ρ, J)` for the momentum flux `𝒫`, without
    /// cancellation for small `(δ, v)`.
    pub fn momentum_flux_increment(&self, rho: f64, j: f64, delta: f64, v: f64) -> f64 {
        self.pressure_increment(rho, delta) + (rho * v * (v - 2.0 * j) - j * j * delta) / (rho * (rho + delta))
    }
}

/// Local state `(ρ, E, J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub rho: f64,
    pub e: f64,
    pub j: f64,
}

impl FlowPoint {
    pub fn new(rho: f64, e: f64, j: f64) -> Self {
        Self { rho, e, j }
    }

    /// Velocity `u = J/ρ`.
    pub fn u(&self) -> f64 {
        self.j / self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Supersonic,
    Sonic,
    Subsonic,
}

/// Relative width of the sonic band used by [`regime`].
pub const DEFAULT_SONIC_BAND: f64 = 1e-8;

/// The unique ρ_s with `ρ_s² p′(ρ_s) = J²`.
///
/// `ρ ↦ ρ² p′(ρ)` is strictly increasing from 0 to ∞ for every admitted law,
/// so the bracket `[lo, hi]` is grown geometrically until it straddles J².
pub fn sonic_density(law: &PressureLaw, j: f64) -> Result<f64> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(Error::Domain(format!("mass flux must be positive, got {j}")));
    }
    let target = j * j;
    let f = |r: f64| (r * r * law.dp(r) - target, 2.0 * r * law.dp(r) + r * r * law.ddp(r));
    let mut hi = 1.0;
    while f(hi).0 < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::SolverFailure { what: "sonic_density", lo: 0.0, hi });
        }
    }
    let mut lo = hi;
    while f(lo).0 > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::SolverFailure { what: "sonic_density", lo, hi });
        }
    }
    let rho = newton_bisect(f, lo, hi, 1e-13 * target, 0.0, "sonic_density")?;
    if (rho * rho * law.dp(rho) - target).abs() > 1e-12 * target {
        return Err(Error::SolverFailure { what: "sonic_density", lo: rho, hi: rho });
    }
    Ok(rho)
}

/// Classifies `point` with the default band `1e-8 · ρ_s`.
pub fn regime(law: &PressureLaw, point: &FlowPoint) -> Result<Regime> {
    let rho_s = sonic_density(law, point.j)?;
    Ok(regime_with_band(rho_s, point.rho, DEFAULT_SONIC_BAND * rho_s))
}

/// Classifies density `rho` against a precomputed sonic density.
pub fn regime_with_band(rho_s: f64, rho: f64, tol_sonic: f64) -> Regime {
    if rho < rho_s - tol_sonic {
        Regime::Supersonic
    } else if rho > rho_s + tol_sonic {
        Regime::Subsonic
    } else {
        Regime::Sonic
    }
}
