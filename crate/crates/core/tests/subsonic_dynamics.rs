mod common;

use std::sync::OnceLock;

use common::*;
use transonic_core::linear::{bump_initial_data, evolve_linear, LinearOptions, StepOptions};
use transonic_core::subsonic::base::{build_base, BaseTables};
use transonic_core::subsonic::dynamics::{
    evolve_and_measure, nonlinear_flux, project_initial, shock_displacement, solve_shock, state_from, DynamicsOptions,
    DynamicsRun, NonlinearStepper, NonlinearTerms, TransformJacobian,
};

const T_RUN: f64 = 30.0;

fn run_on(base: &BaseTables) -> DynamicsRun {
    let (y, yt) = bump_initial_data(base, 1e-3);
    let opts = DynamicsOptions { sample_every: 8, ..DynamicsOptions::default() };
    evolve_and_measure(base, &y, &yt, T_RUN, &opts).unwrap()
}

fn bench_run() -> &'static DynamicsRun {
    static R: OnceLock<DynamicsRun> = OnceLock::new();
    R.get_or_init(|| run_on(bench_base()))
}

#[test]
fn flux_at_zero_perturbation_is_base_flux() {
    let base = bench_base();
    let law = g2();
    for &x in &[0.4, 0.7, 1.0] {
        let rho = base.plus_table.eval(x).unwrap().rho;
        let f = nonlinear_flux(base, 0.0, 0.0, x).unwrap();
        assert!((f - (law.p(rho) + J * J / rho)).abs() < 1e-14);
    }
}

#[test]
fn flux_partials_match_finite_differences() {
    let base = bench_base();
    let law = g2();
    let x = 0.6;
    let rho = base.plus_table.eval(x).unwrap().rho;
    let h = 1e-6;
    let fx = (nonlinear_flux(base, 0.0, h, x).unwrap() - nonlinear_flux(base, 0.0, -h, x).unwrap()) / (2.0 * h);
    let ft = (nonlinear_flux(base, h, 0.0, x).unwrap() - nonlinear_flux(base, -h, 0.0, x).unwrap()) / (2.0 * h);
    assert!((fx - (law.dp(rho) - J * J / (rho * rho))).abs() < 1e-8);
    assert!((ft + 2.0 * J / rho).abs() < 1e-8);
}

#[test]
fn vacuum_and_sonic_states_are_rejected() {
    let base = bench_base();
    assert!(nonlinear_flux(base, 0.0, -10.0, 0.6).is_err());
    assert!(nonlinear_flux(base, 0.0, -0.9, 0.6).is_err());
}

#[test]
fn transform_jacobian_algebra() {
    let t = TransformJacobian::new(0.4, 1.0, 0.01);
    assert!((t.q2() - 0.6 / 0.59).abs() < 1e-15);
    assert!((t.q1(0.4) - t.q2()).abs() < 1e-15);
    assert_eq!(t.q1(1.0), 0.0);
    assert!((t.physical(0.4) - 0.41).abs() < 1e-15);
    assert!((t.physical(1.0) - 1.0).abs() < 1e-15);
    let id = TransformJacobian::new(0.4, 1.0, 0.0);
    assert_eq!(id.q2(), 1.0);
    assert_eq!(id.physical(0.73), 0.73);
}

#[test]
fn shock_displacement_slope_is_the_response_coefficient() {
    let base = bench_base();
    assert_eq!(shock_displacement(base, 0.0).unwrap(), 0.0);
    let eps = 1e-7;
    let fd = (shock_displacement(base, eps).unwrap() - shock_displacement(base, -eps).unwrap()) / (2.0 * eps);
    let c = base.coefficients.d_a3_dy;
    assert!((fd - c).abs() <= 1e-5 * c.abs(), "{fd} {c}");
}

#[test]
fn shock_speed_follows_from_the_jump() {
    let base = bench_base();
    let sh = solve_shock(base, 1e-5, 2e-5, 0.0).unwrap();
    assert!((sh.sigma_dot + 2e-5 / (sh.rho_plus - base.minus_table.eval(base.x0 + sh.sigma).unwrap().rho)).abs() < 1e-15);
    let rest = solve_shock(base, 0.0, 0.0, 0.0).unwrap();
    assert_eq!((rest.sigma, rest.sigma_dot, rest.slope, rest.flux), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn zero_state_is_a_fixed_point() {
    let base = bench_base();
    let n = base.n + 1;
    let st = state_from(base, 0.0, vec![0.0; n], vec![0.0; n]).unwrap();
    let stepper = NonlinearStepper::new(base, 1e-3, 4.0, NonlinearTerms::default()).unwrap();
    let next = stepper.step(&st).unwrap();
    assert!(next.y.iter().chain(&next.yt).all(|&v| v == 0.0));
    assert_eq!(next.sigma, 0.0);
}

#[test]
fn small_data_follow_the_linearization() {
    let base = bench_base();
    let (y, yt) = bump_initial_data(base, 1e-7);
    let (_, k) = StepOptions::default().resolve(base, 1.0).unwrap();
    let t = 100.0 * k;
    let step = StepOptions { dt: Some(k), ..StepOptions::default() };
    let nl = evolve_and_measure(base, &y, &yt, t, &DynamicsOptions { step, sample_every: 100, ..DynamicsOptions::default() }).unwrap();
    let lin = evolve_linear(base, &y, &yt, t, &LinearOptions { step, m_max: 0, ..LinearOptions::default() }).unwrap();
    let rel = sup_diff(&nl.final_state.y, &lin.final_state.y) / sup(&lin.final_state.y);
    assert!(rel < 1e-4, "{rel}");
}

#[test]
fn centred_scheme_without_dissipative_terms_is_time_reversible() {
    let base = bench_base();
    let (y, yt) = bump_initial_data(base, 1e-3);
    let terms = NonlinearTerms { zero_order: false, boundary: false };
    let k = 2e-3;
    let fwd = NonlinearStepper::new(base, k, 0.0, terms).unwrap();
    let back = NonlinearStepper::new(base, -k, 0.0, terms).unwrap();
    let start = transonic_core::subsonic::dynamics::PerturbationState {
        t: 0.0,
        y: y.clone(),
        yt: yt.clone(),
        sigma: 0.0,
        sigma_dot: 0.0,
        rho_plus: base.rho[0],
        shock_slope: 0.0,
    };
    let mut st = start.clone();
    for _ in 0..20 {
        st = fwd.step(&st).unwrap();
    }
    assert!(sup_diff(&st.y, &y) > 1e-6, "the state must move");
    for _ in 0..20 {
        st = back.step(&st).unwrap();
    }
    assert!(sup_diff(&st.y, &y) < 1e-10 * sup(&y), "{}", sup_diff(&st.y, &y));
    assert!(sup_diff(&st.yt, &yt) < 1e-10 * sup(&y), "{}", sup_diff(&st.yt, &yt));
}

#[test]
fn projected_initial_data_are_consistent_with_the_jump() {
    let base = bench_base();
    let (y, yt) = bump_initial_data(base, 1e-3);
    let st = project_initial(base, y, yt).unwrap();
    let q2 = TransformJacobian::new(base.x0, base.length, st.sigma).q2();
    let slope = (-3.0 * st.y[0] + 4.0 * st.y[1] - st.y[2]) / (2.0 * base.h);
    assert!((slope * q2 - st.shock_slope).abs() < 1e-12, "{} {}", slope * q2, st.shock_slope);
}

#[test]
fn shock_stays_slaved_along_the_trajectory() {
    let run = bench_run();
    assert!(!run.trajectory.instability_detected);
    assert!(run.trajectory.max_slaving_residual() <= 1e-12);
    // Independent check of the sampled σ against the recomputed displacement.
    let ledger = &run.ledger;
    for (s, &y0) in run.trajectory.samples.iter().zip(&ledger.y_x0) {
        assert_eq!(s.sigma, shock_displacement(bench_base(), y0).unwrap());
    }
}

#[test]
fn amplitude_decays_window_by_window() {
    let run = bench_run();
    let window = 4.138;
    let amp: Vec<(f64, f64)> = run.trajectory.samples.iter().map(|s| (s.t, s.sup_y + s.sigma.abs())).collect();
    let mut maxima = Vec::new();
    let mut t0 = 0.0;
    while t0 + window <= T_RUN {
        let m = amp.iter().filter(|(t, _)| *t >= t0 && *t < t0 + window).map(|p| p.1).fold(0.0, f64::max);
        maxima.push(m);
        t0 += window;
    }
    assert!(maxima.len() >= 6);
    assert!(maxima.windows(2).all(|w| w[1] < w[0]), "{maxima:?}");
    let fit = run.fit.unwrap();
    assert!(fit.lambda > 0.0 && fit.r_squared > 0.9, "{fit:?}");
}

#[test]
fn decay_rate_is_grid_converged() {
    let coarse = build_base(bench_solution(), 100).unwrap();
    let a = run_on(&coarse).fit.unwrap().lambda;
    let b = bench_run().fit.unwrap().lambda;
    assert!((a - b).abs() <= 0.02 * b, "N=100: {a}, N=200: {b}");
}

#[test]
fn zero_data_have_no_fit() {
    let base = bench_base();
    let n = base.n + 1;
    let run = evolve_and_measure(base, &vec![0.0; n], &vec![0.0; n], 0.5, &DynamicsOptions::default()).unwrap();
    assert!(run.fit.is_none());
    assert!(run.final_state.y.iter().all(|&v| v == 0.0));
}
