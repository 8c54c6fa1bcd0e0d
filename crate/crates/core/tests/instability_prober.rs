mod common;

use common::*;
use transonic_core::instability::{
    eigen_residual, find_unstable_length, find_unstable_mode, initial_slope, lambda_upper, scan_terminal_slope, shoot,
    sign_changes, terminal_slope, time_domain_growth, LengthScan, ShootingOptions,
};
use transonic_core::linear::LinearOptions;
use transonic_core::shock_fitter::solution_with_shock_at;
use transonic_core::subsonic::base::{build_base, BaseTables};
use transonic_core::Error;

fn opts() -> ShootingOptions {
    ShootingOptions::default()
}

/// Classical RK4 for the mode equation with the base profile read from the
/// Hermite tables; returns `(Z(L), Z′(L))` for `α = 1`.
fn rk4_terminal(base: &BaseTables, lambda: f64, steps: usize) -> (f64, f64) {
    let law = base.law;
    let j = base.j;
    let rhs = |x: f64, z: [f64; 2]| {
        let st = base.plus_table.eval(x).unwrap();
        let (rho, e, drho) = (st.rho, st.e, st.drho);
        let a = law.dp(rho) - j * j / (rho * rho);
        let da = (law.ddp(rho) + 2.0 * j * j / rho.powi(3)) * drho;
        let u = j / rho;
        let du = -j * drho / (rho * rho);
        let first = da - 2.0 * u * lambda - e;
        let zero = lambda * lambda + 2.0 * lambda * du + rho;
        [z[1], (zero * z[0] - first * z[1]) / a]
    };
    let h = (base.length - base.x0) / steps as f64;
    let mut z = [1.0, initial_slope(base, lambda)];
    for i in 0..steps {
        let x = base.x0 + i as f64 * h;
        let k1 = rhs(x, z);
        let k2 = rhs(x + h / 2.0, [z[0] + h / 2.0 * k1[0], z[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(x + h / 2.0, [z[0] + h / 2.0 * k2[0], z[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(x + h, [z[0] + h * k3[0], z[1] + h * k3[1]]);
        for c in 0..2 {
            z[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    (z[0], z[1])
}

#[test]
fn terminal_slope_changes_sign_across_the_bracket() {
    let base = unstable_base();
    let hi = lambda_upper(base);
    assert!(hi > 0.0);
    assert!(terminal_slope(base, 0.0, &opts()).unwrap() < 0.0);
    assert!(terminal_slope(base, hi, &opts()).unwrap() > 0.0);
}

#[test]
fn shot_is_linear_in_the_normalization() {
    let base = unstable_base();
    let a = shoot(base, 0.1, 1.0, &opts()).unwrap();
    let b = shoot(base, 0.1, 2.5, &opts()).unwrap();
    for (za, zb) in a.z.iter().zip(&b.z) {
        assert!((2.5 * za - zb).abs() <= 1e-10 * zb.abs().max(1.0));
    }
    assert!(shoot(base, -0.1, 1.0, &opts()).is_err());
    assert!(shoot(base, 0.1, 0.0, &opts()).is_err());
}

#[test]
fn stable_benchmark_has_no_growing_mode() {
    let base = bench_base();
    let hi = lambda_upper(base);
    assert!(hi < 0.0, "positive field at the shock gives a negative upper end");
    assert!(matches!(
        find_unstable_mode(base, (0.0, hi.max(1e-3)), 1.0, &opts()),
        Err(Error::NoModeFound { .. })
    ));
}

#[test]
fn constructed_unstable_mode() {
    let base = unstable_base();
    let hi = lambda_upper(base);
    let mode = find_unstable_mode(base, (0.0, hi), 1.0, &opts()).unwrap();
    assert!(mode.lambda > 0.0 && mode.lambda < hi);
    assert!(mode.converged);
    assert!(eigen_residual(base, &mode, &opts()).unwrap() <= 1e-6);
    // Independent RK4 shot: Z′(L) vanishes at λ and changes sign around it.
    let scale = mode.zx.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (_, at) = rk4_terminal(base, mode.lambda, 4000);
    assert!(at.abs() <= 1e-6 * scale, "{at}");
    let (_, below) = rk4_terminal(base, mode.lambda - 1e-3, 4000);
    let (_, above) = rk4_terminal(base, mode.lambda + 1e-3, 4000);
    assert!(below * above < 0.0);
    let growth = time_domain_growth(base, &mode, 3.0, &LinearOptions { m_max: 0, ..LinearOptions::default() }).unwrap();
    assert!(growth.relative_error() <= 0.05, "{growth:?}");
}

#[test]
fn refined_scan_finds_no_further_roots() {
    let base = unstable_base();
    let hi = lambda_upper(base);
    let coarse = sign_changes(&scan_terminal_slope(base, 0.0, hi, 128, &opts()).unwrap());
    let fine = sign_changes(&scan_terminal_slope(base, 0.0, hi, 1024, &opts()).unwrap());
    assert_eq!(coarse.len(), fine.len());
    assert_eq!(fine.len(), 1);
}

#[test]
fn weaker_negative_field_loses_the_mode() {
    let sol = solution_with_shock_at(&g2(), J, &charge(0.6), 0.6, RHO_L, -0.6, 0.1, &steady_opts()).unwrap();
    let base = build_base(&sol, 200).unwrap();
    let hi = lambda_upper(&base).max(1e-3);
    assert!(matches!(find_unstable_mode(&base, (0.0, hi), 1.0, &opts()), Err(Error::NoModeFound { .. })));
}

#[test]
fn length_scan_finds_an_unstable_configuration() {
    let scan = LengthScan { l_max: 1.0, l_min: 0.15, count: 20, grid: 200 };
    let c = 0.5;
    let cfg = find_unstable_length(&g2(), J, &charge(1.0), RHO_L, -1.0, 0.1, c, &scan, &steady_opts(), &opts()).unwrap();
    assert!(cfg.field_at_shock < -c);
    assert!(cfg.mode.lambda > 0.0);
    assert!(cfg.scanned.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(*cfg.scanned.last().unwrap(), cfg.length);
    assert!(eigen_residual(&cfg.base, &cfg.mode, &opts()).unwrap() <= 1e-6);
}

#[test]
fn malformed_length_scan_is_a_usage_error() {
    let scan = LengthScan { l_max: 0.5, l_min: 0.8, count: 4, grid: 200 };
    let r = find_unstable_length(&g2(), J, &charge(1.0), RHO_L, -1.0, 0.1, 0.5, &scan, &steady_opts(), &opts());
    assert!(matches!(r, Err(Error::Usage(_))));
}
