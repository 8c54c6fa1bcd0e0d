//! Steady transonic shock construction by bisection on the shock position,
//! and the structural-stability experiment under background-charge
//! perturbations.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::eos::{sonic_density, FlowPoint, PressureLaw, Regime};
use crate::error::{Error, Result};
use crate::numerics::roots::bisect;
use crate::rankine_hugoniot::{conjugate_state_with_sonic, is_entropy_admissible};
use crate::steady::{integrate_profile_on, uniform_grid, BackgroundCharge, PerturbationShape, SteadyOptions, SteadyProfile};

/// Boundary data: supersonic inflow state at `x = 0` and exit density at `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub rho_l: f64,
    pub e_l: f64,
    pub rho_r: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Required `|g(x₀) − ρ_r|`.
    pub exit_tol: f64,
    /// Required final bracket width on the shock position.
    pub pos_tol: f64,
    /// Number of uniform candidate positions in `(0, L)`.
    pub scan_points: usize,
    pub steady: SteadyOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            exit_tol: 1e-10,
            pos_tol: 1e-12,
            scan_points: 64,
            steady: SteadyOptions { tol: 1e-12, ..SteadyOptions::default() },
        }
    }
}

/// Supersonic profile on `[0, x₀]` joined to a subsonic one on `[x₀, L]`.
#[derive(Debug, Clone)]
pub struct TransonicSolution {
    pub left: SteadyProfile,
    pub right: SteadyProfile,
    pub x0: f64,
    pub j: f64,
    pub length: f64,
    pub exit_density: f64,
    pub field_at_shock: f64,
    pub law: PressureLaw,
}

/// Residuals of the jump at the shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpResiduals {
    /// Relative mismatch of `p + J²/ρ` across the shock.
    pub flux: f64,
    /// `|E(x₀−) − E(x₀+)|`.
    pub field: f64,
    pub entropy_admissible: bool,
}

impl TransonicSolution {
    pub fn upstream(&self) -> FlowPoint {
        self.left.last()
    }

    pub fn downstream(&self) -> FlowPoint {
        self.right.first()
    }

    pub fn jump_residuals(&self) -> JumpResiduals {
        let (up, down) = (self.upstream(), self.downstream());
        let m_up = self.law.momentum_flux(up.rho, self.j);
        let m_down = self.law.momentum_flux(down.rho, self.j);
        JumpResiduals {
            flux: (m_up - m_down).abs() / m_up.abs(),
            field: (up.e - down.e).abs(),
            entropy_admissible: is_entropy_admissible(&self.law, &up, &down, 0.0),
        }
    }

    /// Key numbers of the solution as `key,value` rows.
    pub fn write_metadata<W: Write>(&self, mut w: W) -> io::Result<()> {
        let r = self.jump_residuals();
        writeln!(w, "key,value")?;
        writeln!(w, "x0,{}", self.x0)?;
        writeln!(w, "J,{}", self.j)?;
        writeln!(w, "L,{}", self.length)?;
        writeln!(w, "exit_density,{}", self.exit_density)?;
        writeln!(w, "field_at_shock,{}", self.field_at_shock)?;
        writeln!(w, "rho_upstream,{}", self.upstream().rho)?;
        writeln!(w, "rho_downstream,{}", self.downstream().rho)?;
        writeln!(w, "flux_residual,{}", r.flux)?;
        writeln!(w, "field_residual,{}", r.field)?;
        writeln!(w, "entropy_admissible,{}", r.entropy_admissible as u8)?;
        Ok(())
    }
}

/// Supersonic profile launched from `(ρ_l, E_l)` at `x = 0`, extended as far
/// towards `L` as the flow stays supersonic.
pub fn supersonic_base(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    rho_l: f64,
    e_l: f64,
    opts: &SteadyOptions,
) -> Result<SteadyProfile> {
    let start = FlowPoint::new(rho_l, e_l, j);
    let mut end = length;
    for _ in 0..8 {
        let grid = uniform_grid(0.0, end, opts.intervals_for(end));
        match integrate_profile_on(law, j, b, grid, start, opts) {
            Ok(p) if p.regime == Regime::Supersonic => return Ok(p),
            Ok(_) => return Err(Error::Domain(format!("inflow density {rho_l} is not supersonic"))),
            Err(Error::Singularity { x, .. }) if x > 0.0 => end = x * (1.0 - 1e-3),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Domain("supersonic branch could not be continued away from the sonic state".into()))
}

/// Outcome of placing the shock at `a`.
#[derive(Debug, Clone)]
pub struct ExitEvaluation {
    pub a: f64,
    pub exit_density: f64,
    pub upstream: FlowPoint,
    pub downstream_rho: f64,
    pub subsonic: SteadyProfile,
}

/// Jumps at `a` onto the conjugate subsonic state and integrates to `L`.
pub fn evaluate_shock_at(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    supersonic: &SteadyProfile,
    a: f64,
    opts: &SteadyOptions,
) -> Result<ExitEvaluation> {
    if !(a > 0.0 && a < length) || a > supersonic.x_end() + 1e-14 {
        return Err(Error::Usage(format!("shock position {a} outside (0, {})", supersonic.x_end().min(length))));
    }
    let rho_s = sonic_density(law, j)?;
    let up = supersonic.state_at(a)?;
    let rho_plus = conjugate_state_with_sonic(law, j, up.rho, rho_s)?;
    let grid = uniform_grid(a, length, opts.intervals_for(length - a));
    let sub = integrate_profile_on(law, j, b, grid, FlowPoint::new(rho_plus, up.e, j), opts).map_err(|e| match e {
        Error::Singularity { x, .. } => Error::InfeasibleShockPosition { a, x },
        other => other,
    })?;
    if sub.regime != Regime::Subsonic {
        return Err(Error::InfeasibleShockPosition { a, x: a });
    }
    Ok(ExitEvaluation { a, exit_density: sub.last().rho, upstream: up, downstream_rho: rho_plus, subsonic: sub })
}

/// The exit-density map `g(a) = ρ(L)`.
pub fn exit_density_map(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    supersonic: &SteadyProfile,
    a: f64,
    opts: &SteadyOptions,
) -> Result<f64> {
    Ok(evaluate_shock_at(law, j, b, length, supersonic, a, opts)?.exit_density)
}

/// One scanned candidate position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub a: f64,
    /// `None` when the subsonic branch went sonic before `L`.
    pub g: Option<f64>,
    pub e_sup: f64,
}

/// Evaluates `g` at `n` uniform positions in `(0, L)` (in parallel).
pub fn scan_exit_density(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    supersonic: &SteadyProfile,
    n: usize,
    opts: &SteadyOptions,
) -> Result<Vec<ScanPoint>> {
    let positions: Vec<f64> = (1..=n)
        .map(|i| length * i as f64 / (n + 1) as f64)
        .filter(|&a| a <= supersonic.x_end())
        .collect();
    positions
        .par_iter()
        .map(|&a| {
            let e_sup = supersonic.state_at(a)?.e;
            match exit_density_map(law, j, b, length, supersonic, a, opts) {
                Ok(g) => Ok(ScanPoint { a, g: Some(g), e_sup }),
                Err(Error::InfeasibleShockPosition { .. }) => Ok(ScanPoint { a, g: None, e_sup }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Checks the standing hypotheses of the fit: `0 < b < ρ_s` and a supersonic
/// inflow with a subsonic exit density.
fn check_hypotheses(law: &PressureLaw, j: f64, b: &BackgroundCharge, boundary: &BoundaryData) -> Result<f64> {
    let rho_s = sonic_density(law, j)?;
    let (bmin, bmax) = b.range();
    if !(bmin > 0.0 && bmax < rho_s) {
        return Err(Error::Domain(format!("background charge must satisfy 0 < b < rho_s = {rho_s} (range [{bmin}, {bmax}])")));
    }
    if !(boundary.rho_l < rho_s) {
        return Err(Error::Domain(format!("rho_l = {} is not supersonic (rho_s = {rho_s})", boundary.rho_l)));
    }
    if !(boundary.rho_r > rho_s) {
        return Err(Error::Domain(format!("rho_r = {} is not subsonic (rho_s = {rho_s})", boundary.rho_r)));
    }
    Ok(rho_s)
}

/// Assembles the solution with the shock placed at `x0`.
pub fn solution_at(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    supersonic: &SteadyProfile,
    x0: f64,
    opts: &SteadyOptions,
) -> Result<TransonicSolution> {
    let ev = evaluate_shock_at(law, j, b, length, supersonic, x0, opts)?;
    let grid = uniform_grid(0.0, x0, opts.intervals_for(x0));
    let mut left = integrate_profile_on(law, j, b, grid, supersonic.first(), opts)?;
    // The jump was taken from the base profile's state at x0; store exactly it.
    let n = left.len() - 1;
    left.rho[n] = ev.upstream.rho;
    left.e[n] = ev.upstream.e;
    Ok(TransonicSolution {
        left,
        field_at_shock: ev.upstream.e,
        exit_density: ev.exit_density,
        right: ev.subsonic,
        x0,
        j,
        length,
        law: *law,
    })
}

/// Builds the transonic solution with the shock prescribed at `x0`, e.g. to
/// manufacture an exit density for a round trip.
pub fn solution_with_shock_at(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    rho_l: f64,
    e_l: f64,
    x0: f64,
    opts: &SteadyOptions,
) -> Result<TransonicSolution> {
    let sup = supersonic_base(law, j, b, length, rho_l, e_l, opts)?;
    solution_at(law, j, b, length, &sup, x0, opts)
}

/// Finds the shock position with `g(x₀) = ρ_r`.
pub fn fit_shock(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    boundary: &BoundaryData,
    length: f64,
    opts: &FitOptions,
) -> Result<TransonicSolution> {
    check_hypotheses(law, j, b, boundary)?;
    let sup = supersonic_base(law, j, b, length, boundary.rho_l, boundary.e_l, &opts.steady)?;
    let scan = scan_exit_density(law, j, b, length, &sup, opts.scan_points, &opts.steady)?;
    let feasible: Vec<(f64, f64, f64)> = scan.iter().filter_map(|p| p.g.map(|g| (p.a, g, p.e_sup))).collect();
    if feasible.is_empty() {
        return Err(Error::NoSolution { target: boundary.rho_r, min: f64::NAN, max: f64::NAN });
    }
    for w in feasible.windows(2) {
        if w[1].1 >= w[0].1 {
            let detail = if w[0].2 <= 0.0 || w[1].2 <= 0.0 {
                format!("exit density not decreasing and E at shock not positive (E = {}, {})", w[0].2, w[1].2)
            } else {
                format!("exit density not decreasing between a = {} and a = {}", w[0].0, w[1].0)
            };
            return Err(Error::HypothesisViolation { a: w[0].0, detail });
        }
    }
    let gmax = feasible[0].1;
    let gmin = feasible[feasible.len() - 1].1;
    let target = boundary.rho_r;
    let bracket = feasible
        .windows(2)
        .find(|w| (w[0].1 - target) * (w[1].1 - target) <= 0.0)
        .map(|w| (w[0].0, w[1].0))
        .ok_or(Error::NoSolution { target, min: gmin, max: gmax })?;
    fit_in_bracket(law, j, b, length, &sup, target, bracket, opts)
}

/// Bisection for `g(a) = ρ_r` on a caller-supplied bracket.
pub fn fit_in_bracket(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    length: f64,
    supersonic: &SteadyProfile,
    rho_r: f64,
    bracket: (f64, f64),
    opts: &FitOptions,
) -> Result<TransonicSolution> {
    let g = |a: f64| Ok(exit_density_map(law, j, b, length, supersonic, a, &opts.steady)? - rho_r);
    let x0 = bisect(g, bracket.0, bracket.1, opts.exit_tol, opts.pos_tol, "fit_shock")?;
    let sol = solution_at(law, j, b, length, supersonic, x0, &opts.steady)?;
    if (sol.exit_density - rho_r).abs() > opts.exit_tol {
        return Err(Error::SolverFailure { what: "fit_shock", lo: bracket.0, hi: bracket.1 });
    }
    Ok(sol)
}

/// One perturbed refit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub shape: PerturbationShape,
    pub eps: f64,
    pub x0: f64,
    /// `|x̃₀ − x₀|/ε` (NaN for ε = 0).
    pub ratio: f64,
    pub direction: f64,
    /// Deviations of the upstream and downstream densities at the shock.
    pub d_rho_upstream: f64,
    pub d_rho_downstream: f64,
    pub d_field_at_shock: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub base_x0: f64,
    pub rows: Vec<StabilityRow>,
    /// Per shape: `max ratio / min ratio` over the nonzero ε.
    pub spreads: Vec<(PerturbationShape, f64)>,
    /// True when every spread is within the factor 3 and every ratio finite.
    pub stable: bool,
}

impl StabilityReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "shape,eps,x0,ratio,direction,d_rho_upstream,d_rho_downstream,d_field_at_shock")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.shape.name(),
                r.eps,
                r.x0,
                r.ratio,
                r.direction,
                r.d_rho_upstream,
                r.d_rho_downstream,
                r.d_field_at_shock
            )?;
        }
        Ok(())
    }
}

/// Refits the shock with `b + ε·shape` for every listed ε and shape.
pub fn structural_stability_experiment(
    base_b: &BackgroundCharge,
    perturbations: &[f64],
    shapes: &[PerturbationShape],
    law: &PressureLaw,
    j: f64,
    boundary: &BoundaryData,
    length: f64,
    opts: &FitOptions,
) -> Result<StabilityReport> {
    let base = fit_shock(law, j, base_b, boundary, length, opts)?;
    if !(base.field_at_shock > 0.0) {
        return Err(Error::HypothesisViolation { a: base.x0, detail: "E at the base shock is not positive".into() });
    }
    let jobs: Vec<(PerturbationShape, f64)> =
        shapes.iter().flat_map(|&s| perturbations.iter().map(move |&e| (s, e))).collect();
    let rows: Vec<StabilityRow> = jobs
        .par_iter()
        .map(|&(shape, eps)| {
            let b = base_b.perturbed(shape, eps);
            let sol = fit_shock(law, j, &b, boundary, length, opts)?;
            let dx = sol.x0 - base.x0;
            Ok(StabilityRow {
                shape,
                eps,
                x0: sol.x0,
                ratio: if eps == 0.0 { f64::NAN } else { dx.abs() / eps.abs() },
                direction: dx.signum() * if dx == 0.0 { 0.0 } else { 1.0 },
                d_rho_upstream: (sol.upstream().rho - base.upstream().rho).abs(),
                d_rho_downstream: (sol.downstream().rho - base.downstream().rho).abs(),
                d_field_at_shock: (sol.field_at_shock - base.field_at_shock).abs(),
            })
        })
        .collect::<Result<_>>()?;
    let mut spreads = Vec::new();
    let mut stable = true;
    for &shape in shapes {
        let ratios: Vec<f64> = rows.iter().filter(|r| r.shape == shape && r.eps != 0.0).map(|r| r.ratio).collect();
        if ratios.is_empty() {
            continue;
        }
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = hi / lo;
        stable &= hi.is_finite() && lo > 0.0 && spread <= 3.0;
        spreads.push((shape, spread));
    }
    Ok(StabilityReport { base_x0: base.x0, rows, spreads, stable })
}
