mod common;

use std::sync::OnceLock;

use common::*;
use rayon::prelude::*;
use transonic_core::eos::FlowPoint;
use transonic_core::instability::{find_unstable_mode, lambda_upper, ShootingOptions};
use transonic_core::linear::characteristic::characteristic_transform;
use transonic_core::linear::observability::{observability_check, ObservabilityOptions};
use transonic_core::linear::spectrum::{solution_operator_spectrum, SpectrumOptions, XNorm};
use transonic_core::linear::{
    bump_initial_data, evolve_linear, fit_decay_rate, random_initial_data, DecayFit, LinearOptions, LinearRun, StepOptions,
};
use transonic_core::shock_fitter::TransonicSolution;
use transonic_core::steady::{integrate, BackgroundCharge};
use transonic_core::subsonic::base::build_base;
use transonic_core::Error;

const T_LONG: f64 = 60.0;

fn bench_linear() -> &'static (LinearRun, DecayFit) {
    static R: OnceLock<(LinearRun, DecayFit)> = OnceLock::new();
    R.get_or_init(|| {
        let (h1, h2) = bump_initial_data(bench_base(), 1e-3);
        let run = evolve_linear(bench_base(), &h1, &h2, T_LONG, &LinearOptions::default()).unwrap();
        let fit = fit_decay_rate(&run.ledger).unwrap();
        (run, fit)
    })
}

#[test]
fn zero_data_stay_zero() {
    let base = bench_base();
    let n = base.n + 1;
    let run = evolve_linear(base, &vec![0.0; n], &vec![0.0; n], 1.0, &LinearOptions::default()).unwrap();
    assert!(run.ledger.phi.iter().flatten().all(|&p| p == 0.0));
    assert!(run.ledger.d0.iter().chain(&run.ledger.identity_residual).all(|&p| p == 0.0));
}

#[test]
fn energy_identity_residual_is_second_order_in_the_step() {
    let base = bench_base();
    let (h1, h2) = bump_initial_data(base, 1e-3);
    let (_, k) = StepOptions::default().resolve(base, 1.0).unwrap();
    let residual = |dt: f64| {
        let o = LinearOptions { step: StepOptions { dt: Some(dt), ..StepOptions::default() }, m_max: 0, ..LinearOptions::default() };
        evolve_linear(base, &h1, &h2, 2.0, &o).unwrap().ledger.max_abs_identity_residual()
    };
    let ratio = residual(k) / residual(k / 2.0);
    assert!((ratio - 4.0).abs() <= 0.8, "{ratio}");
}

#[test]
fn dissipation_accumulates_and_energy_stays_positive() {
    let (run, _) = bench_linear();
    let l = &run.ledger;
    assert!(l.d0.windows(2).all(|w| w[1] >= w[0]));
    assert!(bench_base().e[0] > 0.0);
    assert!(l.phi[0].iter().all(|&p| p >= 0.0));
    // φ₀(t) + D₀(t) never exceeds the initial energy by more than round-off.
    let phi00 = l.phi[0][0];
    assert!(l.identity_residual.iter().all(|&r| r <= 1e-6 * phi00));
}

#[test]
fn stable_benchmark_contracts_every_window() {
    let (_, fit) = bench_linear();
    assert!(!fit.unstable);
    assert!(fit.lambda0 > 0.0 && fit.r_squared > 0.99, "{fit:?}");
    assert!((fit.window - 4.138).abs() < 0.05, "{}", fit.window);
    let a = &fit.alpha0_per_window;
    assert!(a.len() >= 5);
    assert!(a.iter().all(|&x| x < 1.0));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    assert!(a.iter().all(|&x| (x - mean).abs() <= 0.1 * mean), "{a:?}");
    // Consistency of the window ratio with the fitted rate.
    assert!(((-fit.lambda0 * fit.window).exp() / mean - 1.0).abs() < 0.1);
}

#[test]
fn unstable_base_is_flagged_with_twice_the_mode_rate() {
    let base = unstable_base();
    let mode = find_unstable_mode(base, (0.0, lambda_upper(base)), 1.0, &ShootingOptions::default()).unwrap();
    let (h1, h2) = bump_initial_data(base, 1e-6);
    let run = evolve_linear(base, &h1, &h2, 40.0, &LinearOptions { m_max: 1, ..LinearOptions::default() }).unwrap();
    let fit = fit_decay_rate(&run.ledger).unwrap();
    assert!(fit.unstable);
    assert!((fit.lambda0 + 2.0 * mode.lambda).abs() <= 0.1 * 2.0 * mode.lambda, "{} vs {}", fit.lambda0, mode.lambda);
}

/// Constant subsonic state behind a shock at which the field vanishes.
fn constant_solution() -> TransonicSolution {
    let law = g2();
    let (x0, length, rho_p) = (0.3, 1.0, 1.5);
    let flux = |r: f64| law.p(r) + J * J / r;
    // Supersonic conjugate of ρ₊ by bisection on the momentum flux.
    let (mut lo, mut hi) = (1e-3, 0.7937);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if flux(mid) > flux(rho_p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho_m = 0.5 * (lo + hi);
    let opts = steady_opts();
    let left = integrate(&law, J, &BackgroundCharge::constant(rho_m, length), 0.0, x0, FlowPoint::new(rho_m, 0.0, J), &opts).unwrap();
    let right =
        integrate(&law, J, &BackgroundCharge::constant(rho_p, length), x0, length, FlowPoint::new(rho_p, 0.0, J), &opts).unwrap();
    TransonicSolution { left, right, x0, j: J, length, exit_density: rho_p, field_at_shock: 0.0, law }
}

#[test]
fn constant_base_has_no_first_order_term_and_closed_form_travel_time() {
    let base = build_base(&constant_solution(), 128).unwrap();
    let frame = characteristic_transform(&base).unwrap();
    assert!(frame.m.iter().all(|&m| m == 0.0));
    let rho = 1.5;
    let c = g2().dp(rho).sqrt();
    let u = J / rho;
    let zeta_l = 0.7 * c / (c * c - u * u);
    assert!((frame.zeta_l - zeta_l).abs() < 1e-12, "{} {zeta_l}", frame.zeta_l);
    let n = (c * c - u * u) * rho / (c * c);
    assert!(frame.n.iter().all(|&v| (v - n).abs() < 1e-12));
    assert!(frame.weight_conditions_hold());
}

#[test]
fn characteristic_frame_of_the_benchmark() {
    let frame = characteristic_transform(bench_base()).unwrap();
    assert!(frame.n.iter().all(|&v| v > 0.0));
    assert!(frame.zeta.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(frame.zeta[0], 0.0);
    assert!(frame.weight_conditions_hold());
    let fine = characteristic_transform(&build_base(bench_solution(), 400).unwrap()).unwrap();
    assert!((frame.zeta_l - fine.zeta_l).abs() < 1e-10);
    // ζ_L is half the round-trip time when the signal speeds are c ∓ ū.
    assert!((2.0 * frame.zeta_l - bench_base().round_trip_time()).abs() < 1e-10);
}

#[test]
fn boundary_trace_observes_interior_energy() {
    let base = bench_base();
    let zeta_l = characteristic_transform(base).unwrap().zeta_l;
    let t_obs = 4.0 * zeta_l;
    let opts = ObservabilityOptions::default();
    let ratios: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let (h1, h2) = random_initial_data(base, seed, 1e-3);
            let run = evolve_linear(base, &h1, &h2, 2.0 * t_obs, &LinearOptions { m_max: 0, ..LinearOptions::default() }).unwrap();
            let r1 = observability_check(&run.ledger, zeta_l, t_obs, &opts).unwrap();
            let r2 = observability_check(&run.ledger, zeta_l, 2.0 * t_obs, &opts).unwrap();
            assert!(!r1.zero_data && r1.lhs > 0.0 && r1.rhs > 0.0);
            (r1.ratio, r2.ratio)
        })
        .collect();
    let min1 = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min2 = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    assert!(min1.is_finite() && min1 > 0.0);
    assert!(min2 >= min1, "{min1} {min2}");
}

#[test]
fn observation_window_must_cover_two_crossings() {
    let (run, _) = bench_linear();
    let zeta_l = characteristic_transform(bench_base()).unwrap().zeta_l;
    assert!(observability_check(&run.ledger, zeta_l, 1.5 * zeta_l, &ObservabilityOptions::default()).is_err());
}

#[test]
fn stable_spectrum_matches_the_energy_decay() {
    let (_, fit) = bench_linear();
    let t = fit.window;
    let r = solution_operator_spectrum(bench_base(), t, 1, &SpectrumOptions::default()).unwrap();
    assert!(r.dominant_modulus < 1.0);
    // φ₀ is quadratic, so amplitudes decay at half the energy rate.
    let predicted = (-fit.lambda0 * t / 2.0).exp();
    assert!((r.dominant_modulus / predicted - 1.0).abs() < 0.1, "{} {predicted}", r.dominant_modulus);
    let arnoldi = solution_operator_spectrum(bench_base(), t, 3, &SpectrumOptions::default()).unwrap();
    assert_eq!(arnoldi.ritz.len(), 3);
    assert!(arnoldi.ritz.windows(2).all(|w| w[0].0.hypot(w[0].1) >= w[1].0.hypot(w[1].1)));
    assert!((arnoldi.dominant_modulus - r.dominant_modulus).abs() < 1e-3 * r.dominant_modulus);
}

#[test]
fn short_horizon_operator_is_near_identity() {
    let r = solution_operator_spectrum(bench_base(), 1e-3, 1, &SpectrumOptions::default()).unwrap();
    assert!((r.dominant_modulus - 1.0).abs() < 1e-3, "{}", r.dominant_modulus);
}

#[test]
fn unstable_spectrum_matches_the_growing_mode() {
    let base = unstable_base();
    let mode = find_unstable_mode(base, (0.0, lambda_upper(base)), 1.0, &ShootingOptions::default()).unwrap();
    let opts = SpectrumOptions { norm: XNorm::Shifted, ..SpectrumOptions::default() };
    let t = 2.0;
    let r = solution_operator_spectrum(base, t, 1, &opts).unwrap();
    let predicted = (mode.lambda * t).exp();
    assert!(r.dominant_modulus > 1.0);
    assert!((r.dominant_modulus / predicted - 1.0).abs() < 0.1, "{} {predicted}", r.dominant_modulus);
    assert!(matches!(
        solution_operator_spectrum(base, t, 1, &SpectrumOptions::default()),
        Err(Error::NormDegenerate { .. })
    ));
}
