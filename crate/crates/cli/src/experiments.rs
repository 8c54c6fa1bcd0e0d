//! Dispatch from a validated config to the solver modules. Every kind renders
//! its outputs into memory first, so a failing run leaves nothing behind.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use transonic_core::eos::FlowPoint;
use transonic_core::instability::{
    eigen_residual, find_unstable_length, lambda_upper, scan_terminal_slope, time_domain_growth, LengthScan, ShootingOptions,
};
use transonic_core::linear::characteristic::characteristic_transform;
use transonic_core::linear::observability::{observability_check, ObservabilityOptions};
use transonic_core::linear::spectrum::{solution_operator_spectrum, SpectrumOptions};
use transonic_core::linear::{bump_initial_data, evolve_linear, fit_decay_rate, random_initial_data, LinearOptions};
use transonic_core::shock_fitter::{
    fit_shock, scan_exit_density, solution_with_shock_at, structural_stability_experiment, supersonic_base, BoundaryData,
    TransonicSolution,
};
use transonic_core::steady::integrate;
use transonic_core::subsonic::base::{build_base, BaseTables};
use transonic_core::subsonic::dynamics::{evolve_and_measure, DynamicsOptions};

use crate::config::{validate, InitialData, Kind, Plan, Setup, ShockPlacement, TimeRun, Validated};
use crate::error::{CliError, Context, Result};

/// Files and summary numbers produced by one experiment.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    /// Relative path and contents, in emission order.
    pub files: Vec<(String, Vec<u8>)>,
    pub residuals: BTreeMap<String, f64>,
    /// The number a sweep tabulates for this run.
    pub headline: Option<(String, f64)>,
}

impl Outputs {
    fn file<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf).map_err(|source| CliError::Io { path: name.to_string(), source })?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    fn headline(&mut self, name: &str, value: f64) {
        self.headline = Some((name.to_string(), value));
    }
}

fn key_values(w: &mut Vec<u8>, rows: &[(&str, f64)]) -> std::io::Result<()> {
    writeln!(w, "key,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

/// The transonic solution the time-dependent kinds linearize about.
pub fn transonic_solution(setup: &Setup) -> Result<TransonicSolution> {
    match setup.placement() {
        Some(ShockPlacement::Prescribed(x0)) => solution_with_shock_at(
            &setup.law,
            setup.j,
            &setup.charge,
            setup.length,
            setup.rho_l,
            setup.e_l,
            x0,
            &setup.steady(),
        )
        .context("shock-fitter"),
        Some(ShockPlacement::Fitted { rho_r }) => {
            let boundary = BoundaryData { rho_l: setup.rho_l, e_l: setup.e_l, rho_r };
            fit_shock(&setup.law, setup.j, &setup.charge, &boundary, setup.length, &setup.fit).context("shock-fitter")
        }
        None => Err(CliError::Validation(vec!["flow.x0: either flow.x0 or flow.rho_r is required".into()])),
    }
}

fn base_tables(setup: &Setup) -> Result<BaseTables> {
    let solution = transonic_solution(setup)?;
    build_base(&solution, setup.grid).context("subsonic base state")
}

fn initial_data(base: &BaseTables, run: &TimeRun, seed: u64) -> (Vec<f64>, Vec<f64>) {
    match run.initial {
        InitialData::Bump => bump_initial_data(base, run.amplitude),
        InitialData::Random => random_initial_data(base, seed, run.amplitude),
    }
}

fn run_steady(setup: &Setup, out: &mut Outputs) -> Result<()> {
    let start = FlowPoint::new(setup.rho_l, setup.e_l, setup.j);
    let profile =
        integrate(&setup.law, setup.j, &setup.charge, 0.0, setup.length, start, &setup.steady()).context("steady-ode")?;
    out.file("profile.csv", |w| profile.write_csv(w))?;
    out.residual("poisson_residual", profile.poisson_residual());
    out.headline("rho_end", profile.last().rho);
    Ok(())
}

fn run_fit(setup: &Setup, out: &mut Outputs) -> Result<()> {
    let rho_r = setup.rho_r.ok_or_else(|| CliError::Validation(vec!["flow.rho_r: missing".into()]))?;
    let boundary = BoundaryData { rho_l: setup.rho_l, e_l: setup.e_l, rho_r };
    let solution =
        fit_shock(&setup.law, setup.j, &setup.charge, &boundary, setup.length, &setup.fit).context("shock-fitter")?;
    let sup = supersonic_base(&setup.law, setup.j, &setup.charge, setup.length, setup.rho_l, setup.e_l, &setup.steady())
        .context("shock-fitter")?;
    let scan = scan_exit_density(&setup.law, setup.j, &setup.charge, setup.length, &sup, setup.fit.scan_points, &setup.steady())
        .context("shock-fitter")?;
    out.file("supersonic.csv", |w| solution.left.write_csv(w))?;
    out.file("subsonic.csv", |w| solution.right.write_csv(w))?;
    out.file("metadata.csv", |w| solution.write_metadata(w))?;
    out.file("exit_map.csv", |w| {
        writeln!(w, "a,g,E_sup")?;
        for p in &scan {
            match p.g {
                Some(g) => writeln!(w, "{},{},{}", p.a, g, p.e_sup)?,
                None => writeln!(w, "{},,{}", p.a, p.e_sup)?,
            }
        }
        Ok(())
    })?;
    let r = solution.jump_residuals();
    out.residual("exit_residual", (solution.exit_density - rho_r).abs());
    out.residual("flux_residual", r.flux);
    out.residual("field_residual", r.field);
    out.headline("x0", solution.x0);
    Ok(())
}

fn run_perturb(setup: &Setup, eps: &[f64], shapes: &[transonic_core::steady::PerturbationShape], out: &mut Outputs) -> Result<()> {
    let rho_r = setup.rho_r.ok_or_else(|| CliError::Validation(vec!["flow.rho_r: missing".into()]))?;
    let boundary = BoundaryData { rho_l: setup.rho_l, e_l: setup.e_l, rho_r };
    let report = structural_stability_experiment(&setup.charge, eps, shapes, &setup.law, setup.j, &boundary, setup.length, &setup.fit)
        .context("shock-fitter")?;
    out.file("stability.csv", |w| report.write_csv(w))?;
    out.file("spreads.csv", |w| {
        writeln!(w, "shape,spread")?;
        for (s, v) in &report.spreads {
            writeln!(w, "{},{}", s.name(), v)?;
        }
        Ok(())
    })?;
    let worst = report.spreads.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    out.residual("max_spread", worst);
    out.residual("stable", if report.stable { 1.0 } else { 0.0 });
    out.headline("max_spread", worst);
    Ok(())
}

fn run_evolve(setup: &Setup, run: &TimeRun, seed: u64, out: &mut Outputs) -> Result<()> {
    let base = base_tables(setup)?;
    let (h1, h2) = initial_data(&base, run, seed);
    let opts = DynamicsOptions { step: setup.step, sample_every: run.sample_every, ..DynamicsOptions::default() };
    let result = evolve_and_measure(&base, &h1, &h2, run.t_final, &opts).context("subsonic-dynamics")?;
    out.file("trajectory.csv", |w| result.trajectory.write_csv(w))?;
    out.file("energy.csv", |w| result.ledger.write_csv(w))?;
    let samples = &result.trajectory.samples;
    let head = (samples.len() / 10).max(1);
    let sigma_early = samples.iter().take(head).map(|s| s.sigma.abs()).fold(0.0, f64::max);
    let sigma_end = samples.last().map_or(0.0, |s| s.sigma.abs());
    let (lambda, r2) = result.fit.map_or((f64::NAN, f64::NAN), |f| (f.lambda, f.r_squared));
    let rows = [
        ("dt", result.dt),
        ("lambda_fit", lambda),
        ("r_squared", r2),
        ("sigma_early_max", sigma_early),
        ("sigma_final", sigma_end),
        ("max_slaving_residual", result.trajectory.max_slaving_residual()),
        ("instability_detected", if result.trajectory.instability_detected { 1.0 } else { 0.0 }),
    ];
    out.file("summary.csv", |w| key_values(w, &rows))?;
    out.residual("max_slaving_residual", result.trajectory.max_slaving_residual());
    out.residual("sigma_final", sigma_end);
    out.headline("lambda_fit", lambda);
    Ok(())
}

fn run_linear(setup: &Setup, run: &TimeRun, seed: u64, out: &mut Outputs) -> Result<()> {
    let base = base_tables(setup)?;
    let (h1, h2) = initial_data(&base, run, seed);
    let opts = LinearOptions { step: setup.step, ..LinearOptions::default() };
    let result = evolve_linear(&base, &h1, &h2, run.t_final, &opts).context("linear-analyzer")?;
    let fit = fit_decay_rate(&result.ledger).context("linear-analyzer")?;
    out.file("ledger.csv", |w| result.ledger.write_csv(w))?;
    let rows = [
        ("dt", result.dt),
        ("theta", result.theta),
        ("lambda0", fit.lambda0),
        ("window", fit.window),
        ("r_squared", fit.r_squared),
        ("unstable", if fit.unstable { 1.0 } else { 0.0 }),
        ("max_identity_residual", result.ledger.max_abs_identity_residual()),
    ];
    out.file("decay.csv", |w| key_values(w, &rows))?;
    out.file("windows.csv", |w| {
        writeln!(w, "window,alpha0")?;
        for (i, a) in fit.alpha0_per_window.iter().enumerate() {
            writeln!(w, "{i},{a}")?;
        }
        Ok(())
    })?;
    out.residual("max_identity_residual", result.ledger.max_abs_identity_residual());
    out.residual("r_squared", fit.r_squared);
    out.headline("lambda0", fit.lambda0);

    if let Some((count, t_obs)) = run.observability {
        let zeta_l = characteristic_transform(&base).context("linear-analyzer")?.zeta_l;
        let rows: Vec<(u64, f64, f64, f64, f64)> = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let s = seed + i;
                let (h1, h2) = random_initial_data(&base, s, run.amplitude);
                let r = evolve_linear(&base, &h1, &h2, 2.0 * t_obs, &opts)?;
                let o = ObservabilityOptions::default();
                let short = observability_check(&r.ledger, zeta_l, t_obs, &o)?;
                let long = observability_check(&r.ledger, zeta_l, 2.0 * t_obs, &o)?;
                Ok((s, short.ratio, long.ratio, short.lhs, short.rhs))
            })
            .collect::<transonic_core::Result<_>>()
            .context("linear-analyzer observability")?;
        out.file("observability.csv", |w| {
            writeln!(w, "seed,ratio_T,ratio_2T,boundary_T,interior_T")?;
            for (s, a, b, l, r) in &rows {
                writeln!(w, "{s},{a},{b},{l},{r}")?;
            }
            Ok(())
        })?;
        let min_ratio = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        out.residual("observability_min_ratio", min_ratio);
    }
    Ok(())
}

fn run_spectrum(setup: &Setup, run: &crate::config::SpectrumRun, out: &mut Outputs) -> Result<()> {
    let base = base_tables(setup)?;
    let opts = SpectrumOptions { step: setup.step, max_iter: run.max_iter, tol: run.tol, norm: run.norm, ..SpectrumOptions::default() };
    let report = solution_operator_spectrum(&base, run.t, run.n_modes, &opts).context("linear-analyzer spectrum")?;
    out.file("spectrum.csv", |w| {
        writeln!(w, "iteration,modulus")?;
        for (i, m) in report.history.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, m)?;
        }
        Ok(())
    })?;
    if !report.ritz.is_empty() {
        out.file("ritz.csv", |w| {
            writeln!(w, "re,im,modulus")?;
            for (re, im) in &report.ritz {
                writeln!(w, "{},{},{}", re, im, re.hypot(*im))?;
            }
            Ok(())
        })?;
    }
    let rows = [
        ("T", run.t),
        ("dominant_modulus", report.dominant_modulus),
        ("iterations", report.iterations as f64),
        ("residual", report.residual),
        ("boundary_weight", report.boundary_weight),
    ];
    out.file("summary.csv", |w| key_values(w, &rows))?;
    out.residual("spectrum_residual", report.residual);
    out.headline("dominant_modulus", report.dominant_modulus);
    Ok(())
}

fn run_instability(setup: &Setup, run: &crate::config::InstabilityRun, out: &mut Outputs) -> Result<()> {
    let scan = LengthScan { l_max: run.l_max, l_min: run.l_min, count: run.count, grid: setup.grid };
    let shoot = ShootingOptions { shoot_tol: setup.shoot_tol, ode_tol: setup.ode_tol, ..ShootingOptions::default() };
    let found = find_unstable_length(
        &setup.law,
        setup.j,
        &setup.charge,
        setup.rho_l,
        setup.e_l,
        run.x0,
        run.c,
        &scan,
        &setup.steady(),
        &shoot,
    )
    .context("instability-prober")?;
    let residual = eigen_residual(&found.base, &found.mode, &shoot).context("instability-prober")?;
    let growth = time_domain_growth(&found.base, &found.mode, run.efolds, &LinearOptions { step: setup.step, ..LinearOptions::default() })
        .context("instability-prober")?;
    let hi = lambda_upper(&found.base);
    let slopes = scan_terminal_slope(&found.base, 0.0, hi, shoot.scan_points, &shoot).context("instability-prober")?;
    out.file("mode.csv", |w| found.mode.write_csv(w))?;
    out.file("record.csv", |w| found.write_record(w, residual))?;
    out.file("terminal_slope.csv", |w| {
        writeln!(w, "lambda,Z_x_L")?;
        for (l, s) in &slopes {
            writeln!(w, "{l},{s}")?;
        }
        Ok(())
    })?;
    let rows = [
        ("measured", growth.measured),
        ("predicted", growth.predicted),
        ("relative_error", growth.relative_error()),
        ("t_final", growth.t_final),
        ("r_squared", growth.r_squared),
    ];
    out.file("growth.csv", |w| key_values(w, &rows))?;
    out.residual("eigen_residual", residual);
    out.residual("terminal_slope", found.mode.terminal_slope.abs());
    out.residual("growth_relative_error", growth.relative_error());
    out.headline("lambda", found.mode.lambda);
    Ok(())
}

fn run_sweep(v: &Validated, kind: Kind, param: &str, values: &[f64], out: &mut Outputs) -> Result<()> {
    let runs: Vec<(f64, std::result::Result<Outputs, String>)> = values
        .par_iter()
        .map(|&value| {
            let child = v
                .raw
                .with_param(param, value)
                .and_then(|c| validate(&c, Some(kind), Some(v.seed)))
                .and_then(|c| execute(&c));
            (value, child.map_err(|e| e.to_string()))
        })
        .collect();
    let mut table = Vec::new();
    for (i, (value, result)) in runs.into_iter().enumerate() {
        let dir = format!("run_{i:03}");
        match result {
            Ok(child) => {
                for (name, bytes) in child.files {
                    out.files.push((format!("{dir}/{name}"), bytes));
                }
                let (metric, m) = child.headline.unwrap_or_else(|| (String::new(), f64::NAN));
                table.push(format!("{i},{value},ok,{metric},{m},"));
            }
            Err(msg) => table.push(format!("{i},{value},failed,,,\"{}\"", msg.replace('"', "'"))),
        }
    }
    let ok = table.iter().filter(|r| r.contains(",ok,")).count();
    out.file("sweep.csv", |w| {
        writeln!(w, "run,{param},status,metric,value,error")?;
        for row in &table {
            writeln!(w, "{row}")?;
        }
        Ok(())
    })?;
    out.residual("runs_ok", ok as f64);
    out.residual("runs_failed", (values.len() - ok) as f64);
    Ok(())
}

/// Runs a validated experiment and returns its rendered outputs.
pub fn execute(v: &Validated) -> Result<Outputs> {
    let mut out = Outputs::default();
    match &v.plan {
        Plan::Steady => run_steady(&v.setup, &mut out)?,
        Plan::Fit => run_fit(&v.setup, &mut out)?,
        Plan::Perturb { eps, shapes } => run_perturb(&v.setup, eps, shapes, &mut out)?,
        Plan::Evolve(run) => run_evolve(&v.setup, run, v.seed, &mut out)?,
        Plan::Linear(run) => run_linear(&v.setup, run, v.seed, &mut out)?,
        Plan::Spectrum(run) => run_spectrum(&v.setup, run, &mut out)?,
        Plan::Instability(run) => run_instability(&v.setup, run, &mut out)?,
        Plan::Sweep { kind, param, values } => run_sweep(v, *kind, param, values, &mut out)?,
    }
    Ok(out)
}
