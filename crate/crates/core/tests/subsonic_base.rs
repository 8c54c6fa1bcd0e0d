mod common;

use common::*;
use proptest::prelude::*;
use transonic_core::subsonic::base::{build_base, shock_response};

/// Fourth-order central difference of samples `f` with spacing `h` at `i`.
fn d4(f: &[f64], h: f64, i: usize) -> f64 {
    (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
}

#[test]
fn principal_coefficient_is_negative_on_subsonic_base() {
    let base = bench_base();
    assert!(base.a11.iter().all(|&a| a < 0.0));
    assert!(base.rho.iter().all(|&r| r > 0.7937005259840998));
    let law = g2();
    for i in 0..=base.n {
        // Independent recomputation: a11 = u² − p′.
        let u = J / base.rho[i];
        assert!((base.a11[i] - (u * u - law.dp(base.rho[i]))).abs() < 1e-14);
        assert_eq!(base.a01[i], u);
    }
}

#[test]
fn lower_order_coefficients_are_divergence_compatible() {
    // b₀/ρ = ∂ₓ(a₀₁/ρ) and b₁/ρ = ∂ₓ(a₁₁/ρ) along the base profile.
    let base = bench_base();
    let q0: Vec<f64> = (0..=base.n).map(|i| base.a01[i] / base.rho[i]).collect();
    let q1: Vec<f64> = (0..=base.n).map(|i| base.a11[i] / base.rho[i]).collect();
    for i in 2..base.n - 1 {
        let r0 = base.b0[i] / base.rho[i] - d4(&q0, base.h, i);
        let r1 = base.b1[i] / base.rho[i] - d4(&q1, base.h, i);
        assert!(r0.abs() < 1e-8 && r1.abs() < 1e-8, "i = {i}: {r0:e} {r1:e}");
    }
}

#[test]
fn density_slope_table_matches_profile_derivative() {
    let base = bench_base();
    for i in 2..base.n - 1 {
        assert!((base.drho[i] - d4(&base.rho, base.h, i)).abs() < 1e-8);
    }
}

#[test]
fn shock_response_closed_forms() {
    let s = bench_solution();
    let (rm, rp, e) = (s.upstream().rho, s.downstream().rho, s.field_at_shock);
    let c = shock_response(&g2(), J, rm, rp, e);
    let u = J / rp;
    let a = g2().dp(rp) - u * u;
    assert_eq!(c.d_a3_dy, 1.0 / (rm - rp));
    assert!(c.d_a3_dy < 0.0);
    assert!((c.d1_0 - 2.0 * u / a).abs() < 1e-14);
    assert!((c.e1_0 - e / a).abs() < 1e-14);
    assert!((c.d_a1_drho - c.d_a2_drho * (rp - rm)).abs() < 1e-14);
    assert!((c.d_a4_dyx + c.d_a1_drho).abs() < 1e-14);
    assert_eq!(c.d_a4_dy, c.d_a2_dshift);
    assert_eq!(bench_base().coefficients, c);
}

#[test]
fn coarse_and_fine_tables_agree_on_shared_nodes() {
    let coarse = bench_base();
    let fine = build_base(bench_solution(), 400).unwrap();
    let dev = (0..=coarse.n).map(|i| (coarse.rho[i] - fine.rho[2 * i]).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn tiny_grids_are_rejected() {
    assert!(build_base(bench_solution(), 32).is_err());
}

#[test]
fn table_reproduces_the_steady_profile() {
    let base = bench_base();
    for &x in &[0.45, 0.6, 0.83, 0.99] {
        let st = base.plus_table.eval(x).unwrap();
        let (rho, e) = base.profile.state_at(x).map(|p| (p.rho, p.e)).unwrap();
        assert!((st.rho - rho).abs() < 1e-9 && (st.e - e).abs() < 1e-9, "x = {x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increment_matches_evaluated_difference(frac in -0.99f64..3.0) {
        let t = &bench_base().plus_table;
        let delta = frac * t.dx;
        let (dr, de) = t.increment(delta).unwrap();
        let st = t.eval(t.x_lo + t.anchor as f64 * t.dx + delta).unwrap();
        let (r0, e0) = (t.rho[t.anchor], t.e[t.anchor]);
        prop_assert!((dr - (st.rho - r0)).abs() <= 1e-13);
        prop_assert!((de - (st.e - e0)).abs() <= 1e-13);
    }

    #[test]
    fn tiny_increments_are_relatively_accurate(delta in prop_oneof![1e-14f64..1e-9, -1e-9f64..-1e-14]) {
        for t in [&bench_base().plus_table, &bench_base().minus_table] {
            let (dr, de) = t.increment(delta).unwrap();
            let (sr, se) = (t.drho[t.anchor] * delta, t.de[t.anchor] * delta);
            prop_assert!((dr / sr - 1.0).abs() < 1e-6, "{} {}", dr, sr);
            prop_assert!((de / se - 1.0).abs() < 1e-6);
        }
    }
}
