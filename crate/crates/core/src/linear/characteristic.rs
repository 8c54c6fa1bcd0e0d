//! Characteristic coordinates of the linearized operator.
//!
//! With `a = p′ − ū²`, `θ = t + ∫ ū/a dx` and `ζ = ∫ c/a dx` the principal part
//! becomes `∂θθ − ∂ζζ`, and the operator reads
//! `∂θθY − ∂ζζY + M ∂ζY + N Y = 0` with
//! `M = a (2p′ − p″ρ̄) ρ̄′/(2c³ρ̄)` and `N = aρ̄/p′`.

use crate::error::Result;
use crate::numerics::{GAUSS5_NODES, GAUSS5_WEIGHTS};
use crate::subsonic::base::BaseTables;

#[derive(Debug, Clone)]
pub struct CharacteristicFrame {
    pub xs: Vec<f64>,
    /// `ζ(x)`, zero at `x₀` and increasing.
    pub zeta: Vec<f64>,
    /// `θ − t` as a function of `x`.
    pub theta_offset: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub zeta_l: f64,
    /// Exponent k in `Y = e^{kζ} Z`.
    pub k_weight: f64,
}

/// Margin applied when selecting k: the conditions must hold for `k/1.1`.
const K_MARGIN: f64 = 1.1;

/// Tabulates ζ, θ − t, M and N on the base grid and selects the weight k.
pub fn characteristic_transform(base: &BaseTables) -> Result<CharacteristicFrame> {
    let law = base.law;
    let j = base.j;
    let dens = |rho: f64| {
        let c = law.sound_speed(rho);
        let u = j / rho;
        let a = c * c - u * u;
        (c / a, u / a)
    };
    let n_nodes = base.n + 1;
    let mut zeta = vec![0.0; n_nodes];
    let mut theta = vec![0.0; n_nodes];
    for i in 0..base.n {
        let (xa, xb) = (base.xs[i], base.xs[i + 1]);
        let (mid, half) = (0.5 * (xa + xb), 0.5 * (xb - xa));
        let mut dz = 0.0;
        let mut dt = 0.0;
        for (t, w) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
            let rho = base.profile.state_at(mid + half * t)?.rho;
            let (fz, ft) = dens(rho);
            dz += w * half * fz;
            dt += w * half * ft;
        }
        zeta[i + 1] = zeta[i] + dz;
        theta[i + 1] = theta[i] + dt;
    }
    let mut m = Vec::with_capacity(n_nodes);
    let mut nn = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let rho = base.rho[i];
        let dp = law.dp(rho);
        let c = dp.sqrt();
        let a = base.a(i);
        m.push(a * (2.0 * dp - law.ddp(rho) * rho) / (2.0 * c * c * c * rho) * base.drho[i]);
        nn.push(a * rho / dp);
    }
    let ok = |k: f64| m.iter().zip(&nn).all(|(&mi, &ni)| 2.0 * k - mi > 0.0 && k * k - k * mi - ni > 0.0);
    let mut k = 1.0;
    while !ok(k / K_MARGIN) {
        k += 1.0;
    }
    Ok(CharacteristicFrame { xs: base.xs.clone(), zeta_l: zeta[n_nodes - 1], zeta, theta_offset: theta, m, n: nn, k_weight: k })
}

impl CharacteristicFrame {
    /// True when both weight conditions hold at every node for `k_weight`.
    pub fn weight_conditions_hold(&self) -> bool {
        let k = self.k_weight;
        self.m.iter().zip(&self.n).all(|(&mi, &ni)| 2.0 * k - mi > 0.0 && k * k - k * mi - ni > 0.0)
    }
}
