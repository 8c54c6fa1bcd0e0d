//! Experiment configuration: a TOML file with top-level `kind`, `seed` and
//! `out` keys plus `[law]`, `[flow]`, `[charge]`, `[solver]` and one section
//! per experiment kind. Every field is optional at parse time; [`validate`]
//! checks what the chosen kind needs and reports all offending keys at once.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use transonic_core::eos::PressureLaw;
use transonic_core::linear::spectrum::XNorm;
use transonic_core::linear::StepOptions;
use transonic_core::shock_fitter::FitOptions;
use transonic_core::steady::{BackgroundCharge, ChargeProfile, PerturbationShape, SteadyOptions};

use crate::error::{CliError, Result};

/// Smallest admissible number of grid points.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Steady,
    Fit,
    Perturb,
    Evolve,
    Linear,
    Spectrum,
    Instability,
    Sweep,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Steady => "steady",
            Kind::Fit => "fit",
            Kind::Perturb => "perturb",
            Kind::Evolve => "evolve",
            Kind::Linear => "linear",
            Kind::Spectrum => "spectrum",
            Kind::Instability => "instability",
            Kind::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    /// `gamma` or `isothermal`.
    pub kind: Option<String>,
    pub k: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub j: Option<f64>,
    pub length: Option<f64>,
    pub rho_l: Option<f64>,
    pub e_l: Option<f64>,
    pub rho_r: Option<f64>,
    /// Prescribed shock position; used instead of fitting to `rho_r`.
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeConfig {
    /// `constant`, `polynomial`, `fourier` or `sampled`.
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    pub mean: Option<f64>,
    pub cos: Option<Vec<f64>>,
    pub sin: Option<Vec<f64>>,
    pub period: Option<f64>,
    pub xs: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub intervals_per_unit: usize,
    pub sonic_band: f64,
    pub exit_tol: f64,
    pub pos_tol: f64,
    pub scan_points: usize,
    /// Grid intervals of the subsonic tables.
    pub grid: usize,
    pub cfl: f64,
    pub c_theta: f64,
    pub shoot_tol: f64,
    pub ode_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        Self {
            tol: fit.steady.tol,
            intervals_per_unit: fit.steady.intervals_per_unit,
            sonic_band: fit.steady.sonic_band,
            exit_tol: fit.exit_tol,
            pos_tol: fit.pos_tol,
            scan_points: fit.scan_points,
            grid: 200,
            cfl: StepOptions::default().cfl,
            c_theta: StepOptions::default().c_theta,
            shoot_tol: 1e-8,
            ode_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub eps: Option<Vec<f64>>,
    pub shapes: Option<Vec<String>>,
}

/// Shared by the `evolve` and `linear` sections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_final: Option<f64>,
    pub amplitude: Option<f64>,
    /// `bump` or `random`.
    pub initial: Option<String>,
    pub sample_every: Option<usize>,
    /// Number of seeded random initial data for the observability check.
    pub observability_runs: Option<usize>,
    pub t_obs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub t: Option<f64>,
    pub n_modes: Option<usize>,
    /// `exact` or `shifted`.
    pub norm: Option<String>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstabilityConfig {
    pub x0: Option<f64>,
    /// Required margin: the field at the shock must lie below `−c`.
    pub c: Option<f64>,
    pub l_max: Option<f64>,
    pub l_min: Option<f64>,
    pub count: Option<usize>,
    /// Length of the time-domain cross-check in e-folds.
    pub efolds: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: Option<Kind>,
    /// One of [`SWEEP_PARAMS`].
    pub param: Option<String>,
    pub values: Option<Vec<f64>>,
}

/// Keys a sweep may vary.
pub const SWEEP_PARAMS: [&str; 8] = ["j", "length", "rho_l", "e_l", "rho_r", "x0", "amplitude", "instability.x0"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub law: LawConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub charge: ChargeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub perturb: Option<PerturbConfig>,
    pub evolve: Option<EvolveConfig>,
    pub linear: Option<EvolveConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub instability: Option<InstabilityConfig>,
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Copy with one sweep parameter replaced, for a child run whose kind is
    /// supplied by the sweep.
    pub fn with_param(&self, param: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.kind = None;
        c.sweep = None;
        match param {
            "j" => c.flow.j = Some(value),
            "length" => c.flow.length = Some(value),
            "rho_l" => c.flow.rho_l = Some(value),
            "e_l" => c.flow.e_l = Some(value),
            "rho_r" => c.flow.rho_r = Some(value),
            "x0" => c.flow.x0 = Some(value),
            "amplitude" => {
                c.evolve.get_or_insert_with(Default::default).amplitude = Some(value);
                c.linear.get_or_insert_with(Default::default).amplitude = Some(value);
            }
            "instability.x0" => c.instability.get_or_insert_with(Default::default).x0 = Some(value),
            other => return Err(CliError::Usage(format!("unknown sweep parameter {other}"))),
        }
        Ok(c)
    }
}

/// Initial data family for time-dependent runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    Bump,
    Random,
}

/// Where the shock of the base solution comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShockPlacement {
    Prescribed(f64),
    Fitted { rho_r: f64 },
}

/// Physical setup shared by all kinds, in solver types.
#[derive(Debug, Clone)]
pub struct Setup {
    pub law: PressureLaw,
    pub j: f64,
    pub length: f64,
    pub charge: BackgroundCharge,
    pub rho_l: f64,
    pub e_l: f64,
    pub rho_r: Option<f64>,
    pub x0: Option<f64>,
    pub fit: FitOptions,
    pub step: StepOptions,
    pub grid: usize,
    pub shoot_tol: f64,
    pub ode_tol: f64,
}

impl Setup {
    pub fn steady(&self) -> SteadyOptions {
        self.fit.steady
    }

    /// Prescribed `x0` wins over fitting to `rho_r`.
    pub fn placement(&self) -> Option<ShockPlacement> {
        match (self.x0, self.rho_r) {
            (Some(x0), _) => Some(ShockPlacement::Prescribed(x0)),
            (None, Some(rho_r)) => Some(ShockPlacement::Fitted { rho_r }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeRun {
    pub t_final: f64,
    pub amplitude: f64,
    pub initial: InitialData,
    pub sample_every: usize,
    pub observability: Option<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub t: f64,
    pub n_modes: usize,
    pub norm: XNorm,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct InstabilityRun {
    pub x0: f64,
    pub c: f64,
    pub l_max: f64,
    pub l_min: f64,
    pub count: usize,
    pub efolds: f64,
}

#[derive(Debug, Clone)]
pub enum Plan {
    Steady,
    Fit,
    Perturb { eps: Vec<f64>, shapes: Vec<PerturbationShape> },
    Evolve(TimeRun),
    Linear(TimeRun),
    Spectrum(SpectrumRun),
    Instability(InstabilityRun),
    Sweep { kind: Kind, param: String, values: Vec<f64> },
}

/// A config that passed validation.
#[derive(Debug, Clone)]
pub struct Validated {
    pub kind: Kind,
    pub seed: u64,
    pub setup: Setup,
    pub plan: Plan,
    pub raw: ExperimentConfig,
}

/// Collects offending keys as `key: reason` strings.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, key: &str, reason: impl fmt::Display) {
        self.0.push(format!("{key}: {reason}"));
    }

    fn need<T: Copy>(&mut self, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(key, "missing");
        }
        v
    }

    fn positive(&mut self, key: &str, v: Option<f64>) -> Option<f64> {
        match v {
            None => {
                self.push(key, "missing");
                None
            }
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                self.push(key, format!("must be positive and finite, got {x}"));
                None
            }
            Some(x) => Some(x),
        }
    }

    fn finite(&mut self, key: &str, v: Option<f64>) -> Option<f64> {
        match self.need(key, v) {
            Some(x) if !x.is_finite() => {
                self.push(key, "must be finite");
                None
            }
            other => other,
        }
    }
}

fn parse_law(p: &mut Problems, c: &LawConfig) -> Option<PressureLaw> {
    let kind = c.kind.as_deref().or_else(|| {
        p.push("law.kind", "missing");
        None
    })?;
    let k = p.positive("law.k", c.k);
    match kind {
        "gamma" => {
            let gamma = match c.gamma {
                Some(g) if g > 1.0 && g.is_finite() => Some(g),
                Some(g) => {
                    p.push("law.gamma", format!("must exceed 1, got {g}"));
                    None
                }
                None => {
                    p.push("law.gamma", "missing");
                    None
                }
            };
            Some(PressureLaw::GammaLaw { k: k?, gamma: gamma? })
        }
        "isothermal" => {
            if c.gamma.is_some() {
                p.push("law.gamma", "not used by the isothermal law");
            }
            Some(PressureLaw::Isothermal { k: k? })
        }
        other => {
            p.push("law.kind", format!("expected gamma or isothermal, got {other}"));
            None
        }
    }
}

fn parse_charge(p: &mut Problems, c: &ChargeConfig, length: f64) -> Option<BackgroundCharge> {
    let kind = c.kind.as_deref().or_else(|| {
        p.push("charge.kind", "missing");
        None
    })?;
    let profile = match kind {
        "constant" => ChargeProfile::Constant(p.positive("charge.value", c.value)?),
        "polynomial" => match &c.coeffs {
            Some(v) if !v.is_empty() => ChargeProfile::Polynomial(v.clone()),
            _ => {
                p.push("charge.coeffs", "missing or empty");
                return None;
            }
        },
        "fourier" => {
            let mean = p.finite("charge.mean", c.mean);
            let period = p.positive("charge.period", c.period);
            let cos = c.cos.clone().unwrap_or_default();
            let sin = c.sin.clone().unwrap_or_default();
            if cos.len() != sin.len() {
                p.push("charge.cos", "cos and sin lists must have equal length");
                return None;
            }
            ChargeProfile::Fourier { mean: mean?, cos, sin, period: period? }
        }
        "sampled" => match (&c.xs, &c.values) {
            (Some(xs), Some(values)) => ChargeProfile::Sampled { xs: xs.clone(), values: values.clone() },
            _ => {
                p.push("charge.xs", "sampled charge needs xs and values");
                return None;
            }
        },
        other => {
            p.push("charge.kind", format!("expected constant, polynomial, fourier or sampled, got {other}"));
            return None;
        }
    };
    match BackgroundCharge::new(profile, length) {
        Ok(b) => Some(b),
        Err(e) => {
            p.push("charge", e);
            None
        }
    }
}

fn check_solver(p: &mut Problems, s: &SolverConfig) {
    for (key, v) in [
        ("solver.tol", s.tol),
        ("solver.sonic_band", s.sonic_band),
        ("solver.exit_tol", s.exit_tol),
        ("solver.pos_tol", s.pos_tol),
        ("solver.cfl", s.cfl),
        ("solver.shoot_tol", s.shoot_tol),
        ("solver.ode_tol", s.ode_tol),
    ] {
        p.positive(key, Some(v));
    }
    if !(s.c_theta >= 0.0) {
        p.push("solver.c_theta", format!("must be non-negative, got {}", s.c_theta));
    }
    if s.grid < MIN_GRID {
        p.push("solver.grid", format!("must be at least {MIN_GRID}, got {}", s.grid));
    }
    if s.intervals_per_unit < MIN_GRID {
        p.push("solver.intervals_per_unit", format!("must be at least {MIN_GRID}, got {}", s.intervals_per_unit));
    }
    if s.scan_points < 2 {
        p.push("solver.scan_points", format!("must be at least 2, got {}", s.scan_points));
    }
}

fn parse_time_run(p: &mut Problems, section: &str, c: Option<&EvolveConfig>, observability: bool) -> Option<TimeRun> {
    let Some(c) = c else {
        p.push(section, "section missing");
        return None;
    };
    let t_final = p.positive(&format!("{section}.t_final"), c.t_final);
    let amplitude = p.positive(&format!("{section}.amplitude"), c.amplitude);
    let initial = match c.initial.as_deref().unwrap_or("bump") {
        "bump" => Some(InitialData::Bump),
        "random" => Some(InitialData::Random),
        other => {
            p.push(&format!("{section}.initial"), format!("expected bump or random, got {other}"));
            None
        }
    };
    let sample_every = c.sample_every.unwrap_or(10);
    if sample_every == 0 {
        p.push(&format!("{section}.sample_every"), "must be at least 1");
    }
    let obs = match (c.observability_runs, c.t_obs) {
        (None, None) => None,
        (Some(n), t) if observability => {
            let t_obs = p.positive(&format!("{section}.t_obs"), t);
            if n == 0 {
                p.push(&format!("{section}.observability_runs"), "must be at least 1");
            }
            t_obs.map(|t| (n, t))
        }
        (None, Some(_)) if observability => {
            p.push(&format!("{section}.observability_runs"), "missing");
            None
        }
        _ => {
            p.push(&format!("{section}.observability_runs"), "only the linear kind runs the observability check");
            None
        }
    };
    if let (Some(t), Some((_, t_obs))) = (t_final, obs) {
        if 2.0 * t_obs > t {
            p.push(&format!("{section}.t_obs"), format!("twice t_obs must not exceed t_final = {t}"));
        }
    }
    Some(TimeRun { t_final: t_final?, amplitude: amplitude?, initial: initial?, sample_every, observability: obs })
}

fn parse_plan(p: &mut Problems, kind: Kind, raw: &ExperimentConfig, setup: Option<&Setup>) -> Option<Plan> {
    let needs_shock = matches!(kind, Kind::Evolve | Kind::Linear | Kind::Spectrum);
    if needs_shock && raw.flow.x0.is_none() && raw.flow.rho_r.is_none() {
        p.push("flow.x0", "either flow.x0 or flow.rho_r is required");
    }
    if matches!(kind, Kind::Fit | Kind::Perturb) {
        p.need("flow.rho_r", raw.flow.rho_r);
    }
    if let (Some(s), Some(x0)) = (setup, raw.flow.x0) {
        if !(x0 > 0.0 && x0 < s.length) {
            p.push("flow.x0", format!("must lie in (0, L = {}), got {x0}", s.length));
        }
    }
    match kind {
        Kind::Steady => Some(Plan::Steady),
        Kind::Fit => Some(Plan::Fit),
        Kind::Perturb => {
            let c = raw.perturb.clone().unwrap_or_default();
            let eps = match c.eps {
                Some(v) if !v.is_empty() && v.iter().all(|e| *e > 0.0 && e.is_finite()) => Some(v),
                Some(_) => {
                    p.push("perturb.eps", "must be a non-empty list of positive numbers");
                    None
                }
                None => {
                    p.push("perturb.eps", "missing");
                    None
                }
            };
            let mut shapes = Vec::new();
            for name in c.shapes.unwrap_or_else(|| PerturbationShape::ALL.iter().map(|s| s.name().to_string()).collect()) {
                match PerturbationShape::ALL.iter().find(|s| s.name() == name) {
                    Some(s) => shapes.push(*s),
                    None => p.push("perturb.shapes", format!("unknown shape {name}")),
                }
            }
            Some(Plan::Perturb { eps: eps?, shapes })
        }
        Kind::Evolve => parse_time_run(p, "evolve", raw.evolve.as_ref(), false).map(Plan::Evolve),
        Kind::Linear => parse_time_run(p, "linear", raw.linear.as_ref(), true).map(Plan::Linear),
        Kind::Spectrum => {
            let Some(c) = raw.spectrum.as_ref() else {
                p.push("spectrum", "section missing");
                return None;
            };
            let t = p.positive("spectrum.t", c.t);
            let norm = match c.norm.as_deref().unwrap_or("exact") {
                "exact" => Some(XNorm::Exact),
                "shifted" => Some(XNorm::Shifted),
                other => {
                    p.push("spectrum.norm", format!("expected exact or shifted, got {other}"));
                    None
                }
            };
            let n_modes = c.n_modes.unwrap_or(1);
            if n_modes == 0 {
                p.push("spectrum.n_modes", "must be at least 1");
            }
            let tol = p.positive("spectrum.tol", Some(c.tol.unwrap_or(1e-9)));
            Some(Plan::Spectrum(SpectrumRun { t: t?, n_modes, norm: norm?, max_iter: c.max_iter.unwrap_or(200).max(1), tol: tol? }))
        }
        Kind::Instability => {
            let Some(c) = raw.instability.as_ref() else {
                p.push("instability", "section missing");
                return None;
            };
            let x0 = p.positive("instability.x0", c.x0);
            let cc = p.positive("instability.c", c.c);
            let l_max = p.positive("instability.l_max", c.l_max);
            let l_min = p.positive("instability.l_min", c.l_min);
            let count = p.need("instability.count", c.count);
            let efolds = p.positive("instability.efolds", Some(c.efolds.unwrap_or(3.0)));
            if let (Some(x0), Some(lo), Some(hi)) = (x0, l_min, l_max) {
                if !(x0 < lo && lo < hi) {
                    p.push("instability.l_min", format!("need x0 < l_min < l_max, got {x0}, {lo}, {hi}"));
                }
            }
            if count == Some(0) {
                p.push("instability.count", "must be at least 1");
            }
            Some(Plan::Instability(InstabilityRun {
                x0: x0?,
                c: cc?,
                l_max: l_max?,
                l_min: l_min?,
                count: count?,
                efolds: efolds?,
            }))
        }
        Kind::Sweep => {
            let Some(c) = raw.sweep.as_ref() else {
                p.push("sweep", "section missing");
                return None;
            };
            let inner = p.need("sweep.kind", c.kind);
            if inner == Some(Kind::Sweep) {
                p.push("sweep.kind", "sweeps cannot nest");
            }
            let param = c.param.clone().or_else(|| {
                p.push("sweep.param", "missing");
                None
            });
            if let Some(name) = &param {
                if !SWEEP_PARAMS.contains(&name.as_str()) {
                    p.push("sweep.param", format!("expected one of {}, got {name}", SWEEP_PARAMS.join(", ")));
                }
            }
            let values = match &c.values {
                Some(v) if !v.is_empty() => Some(v.clone()),
                _ => {
                    p.push("sweep.values", "missing or empty");
                    None
                }
            };
            Some(Plan::Sweep { kind: inner?, param: param?, values: values? })
        }
    }
}

/// Checks `raw` for the given kind. The subcommand's kind must agree with the
/// `kind` key when both are present; the seed argument overrides the file.
pub fn validate(raw: &ExperimentConfig, kind: Option<Kind>, seed: Option<u64>) -> Result<Validated> {
    let mut p = Problems::default();
    let kind = match (kind, raw.kind) {
        (Some(a), Some(b)) if a != b => {
            p.push("kind", format!("config declares {b} but {a} was requested"));
            a
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            p.push("kind", "missing");
            return Err(CliError::Validation(p.0));
        }
    };
    let law = parse_law(&mut p, &raw.law);
    let j = p.positive("flow.j", raw.flow.j);
    let instability_kind = kind == Kind::Instability
        || (kind == Kind::Sweep && raw.sweep.as_ref().and_then(|s| s.kind) == Some(Kind::Instability));
    // The instability kind scans lengths, so the charge must cover the longest.
    let l_max = raw.instability.as_ref().and_then(|c| c.l_max);
    let length = if instability_kind && raw.flow.length.is_none() {
        l_max
    } else {
        p.positive("flow.length", raw.flow.length)
    };
    let charge_length = if instability_kind { l_max.or(length) } else { length };
    let charge = charge_length.and_then(|l| parse_charge(&mut p, &raw.charge, l));
    let rho_l = p.positive("flow.rho_l", raw.flow.rho_l);
    let e_l = p.finite("flow.e_l", raw.flow.e_l);
    if let Some(r) = raw.flow.rho_r {
        if !(r > 0.0 && r.is_finite()) {
            p.push("flow.rho_r", format!("must be positive and finite, got {r}"));
        }
    }
    check_solver(&mut p, &raw.solver);
    let s = &raw.solver;
    let setup = match (law, j, length, charge, rho_l, e_l) {
        (Some(law), Some(j), Some(length), Some(charge), Some(rho_l), Some(e_l)) => Some(Setup {
            law,
            j,
            length,
            charge,
            rho_l,
            e_l,
            rho_r: raw.flow.rho_r,
            x0: raw.flow.x0,
            fit: FitOptions {
                exit_tol: s.exit_tol,
                pos_tol: s.pos_tol,
                scan_points: s.scan_points,
                steady: SteadyOptions { tol: s.tol, intervals_per_unit: s.intervals_per_unit, sonic_band: s.sonic_band },
            },
            step: StepOptions { cfl: s.cfl, c_theta: s.c_theta, ..StepOptions::default() },
            grid: s.grid,
            shoot_tol: s.shoot_tol,
            ode_tol: s.ode_tol,
        }),
        _ => None,
    };
    let plan = parse_plan(&mut p, kind, raw, setup.as_ref());
    if let Some(Plan::Sweep { kind: inner, param, values }) = &plan {
        if let Some(v) = values.first() {
            if let Ok(c) = raw.with_param(param, *v) {
                if let Err(CliError::Validation(items)) = validate(&c, Some(*inner), seed).map(|_| ()) {
                    p.0.extend(items.into_iter().filter(|s| !s.starts_with("kind:")));
                }
            }
        }
    }
    if !p.0.is_empty() {
        return Err(CliError::Validation(p.0));
    }
    Ok(Validated {
        kind,
        seed: seed.or(raw.seed).unwrap_or(0),
        setup: setup.expect("validated setup"),
        plan: plan.expect("validated plan"),
        raw: raw.clone(),
    })
}
