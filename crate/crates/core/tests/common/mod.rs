#![allow(dead_code)]

use std::sync::OnceLock;

use transonic_core::eos::PressureLaw;
use transonic_core::shock_fitter::{solution_with_shock_at, FitOptions, TransonicSolution};
use transonic_core::steady::{BackgroundCharge, SteadyOptions};
use transonic_core::subsonic::base::{build_base, BaseTables};

pub const J: f64 = 1.0;
pub const RHO_L: f64 = 0.4;
pub const E_L: f64 = 0.2;
pub const LENGTH: f64 = 1.0;
pub const X0: f64 = 0.4;

pub fn g2() -> PressureLaw {
    PressureLaw::GammaLaw { k: 1.0, gamma: 2.0 }
}

pub fn charge(length: f64) -> BackgroundCharge {
    BackgroundCharge::constant(0.5, length)
}

pub fn steady_opts() -> SteadyOptions {
    FitOptions::default().steady
}

/// The stable benchmark with its shock at x₀ = 0.4.
pub fn bench_solution() -> &'static TransonicSolution {
    static S: OnceLock<TransonicSolution> = OnceLock::new();
    S.get_or_init(|| solution_with_shock_at(&g2(), J, &charge(LENGTH), LENGTH, RHO_L, E_L, X0, &steady_opts()).unwrap())
}

/// Benchmark tables on 200 intervals.
pub fn bench_base() -> &'static BaseTables {
    static B: OnceLock<BaseTables> = OnceLock::new();
    B.get_or_init(|| build_base(bench_solution(), 200).unwrap())
}

/// A solution with a strongly negative field at the shock (x₀ = 0.1,
/// E_l = −1, L = 0.6), which carries a growing mode with λ ≈ 0.2.
pub fn unstable_base() -> &'static BaseTables {
    static B: OnceLock<BaseTables> = OnceLock::new();
    B.get_or_init(|| {
        let sol = solution_with_shock_at(&g2(), J, &charge(0.6), 0.6, RHO_L, -1.0, 0.1, &steady_opts()).unwrap();
        build_base(&sol, 200).unwrap()
    })
}

/// Sup norm of `a − b`.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
