//! Growing modes `Y = e^{λt} Z` of the linearized subsonic problem, found by
//! shooting in λ on
//!
//! ```text
//! a Z″ + (a′ − 2ūλ − Ē) Z′ − (λ² + 2λū′ + ρ̄) Z = 0,   a = p′(ρ̄) − ū²,
//! Z(x₀) = α,   Z′(x₀) = (2ū/a)(Ē/(2ū) + λ) α,
//! ```
//!
//! with the eigenvalue fixed by `Z′(L) = 0`. The ODE is integrated together
//! with the steady subsonic profile from the shock.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::eos::PressureLaw;
use crate::error::{Error, Result};
use crate::linear::{evolve_linear, LinearOptions};
use crate::numerics::linalg::{linear_fit, sup_norm};
use crate::numerics::rk::{integrate_to_grid, RkOptions};
use crate::numerics::roots::bisect;
use crate::shock_fitter::{solution_at, supersonic_base, TransonicSolution};
use crate::steady::{uniform_grid, BackgroundCharge, SteadyOptions};
use crate::subsonic::base::{build_base, BaseTables};

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Convergence threshold on `|Z′(L)|`, relative to α.
    pub shoot_tol: f64,
    /// Number of λ samples in the sign-change scan.
    pub scan_points: usize,
    /// Integrator tolerance for the joint profile and mode ODE.
    pub ode_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { shoot_tol: 1e-8, scan_points: 128, ode_tol: 1e-12 }
    }
}

/// Outcome of one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub lambda: f64,
    pub alpha: f64,
    pub xs: Vec<f64>,
    pub z: Vec<f64>,
    pub zx: Vec<f64>,
    /// `Z′(L)`.
    pub terminal_slope: f64,
    pub converged: bool,
}

impl ShootingResult {
    /// Writes `x,Z,Z_x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,Z,Z_x")?;
        for i in 0..self.xs.len() {
            writeln!(w, "{},{},{}", self.xs[i], self.z[i], self.zx[i])?;
        }
        Ok(())
    }
}

/// Coefficients of the mode equation at a steady state `(ρ, E)`.
struct ModeCoefficients {
    a: f64,
    first: f64,
    zero: f64,
}

fn mode_coefficients(law: &PressureLaw, j: f64, b: f64, rho: f64, e: f64, lambda: f64) -> Result<(ModeCoefficients, [f64; 2])> {
    let a = law.sonic_gap(rho, j);
    if !(a > 0.0) {
        return Err(Error::StateInvalid(format!("profile left the subsonic regime: rho = {rho}")));
    }
    let drho = rho * e / a;
    let u = j / rho;
    let du = -j * drho / (rho * rho);
    let da = law.sonic_gap_derivative(rho, j) * drho;
    let c = ModeCoefficients { a, first: da - 2.0 * u * lambda - e, zero: lambda * lambda + 2.0 * lambda * du + rho };
    Ok((c, [drho, rho - b]))
}

/// Initial slope `Z′(x₀)/α`.
pub fn initial_slope(base: &BaseTables, lambda: f64) -> f64 {
    let u = base.u[0];
    let a = base.a(0);
    2.0 * u / a * (base.e[0] / (2.0 * u) + lambda)
}

/// Upper end `−Ē₊(x₀)/ū₊(x₀)` of the growth-rate bracket.
pub fn lambda_upper(base: &BaseTables) -> f64 {
    -base.e[0] / base.u[0]
}

fn integrate_mode(base: &BaseTables, lambda: f64, grid: &[f64], tol: f64) -> Result<Vec<[f64; 4]>> {
    let law = base.law;
    let j = base.j;
    let b = &base.profile.b;
    let f = |x: f64, s: &[f64; 4]| -> Result<[f64; 4]> {
        let (c, [drho, de]) = mode_coefficients(&law, j, b.eval(x), s[0], s[1], lambda)?;
        Ok([drho, de, s[3], (c.zero * s[2] - c.first * s[3]) / c.a])
    };
    let y0 = [base.rho[0], base.e[0], 1.0, initial_slope(base, lambda)];
    integrate_to_grid(f, grid, y0, &RkOptions::with_tol(tol))
}

/// Shoots from `x₀` with `Z(x₀) = α` and returns the mode on the base grid.
/// The equation is linear in `Z`, so the integration is carried out for
/// `α = 1` and scaled.
pub fn shoot(base: &BaseTables, lambda: f64, alpha: f64, opts: &ShootingOptions) -> Result<ShootingResult> {
    if !(lambda >= 0.0) {
        return Err(Error::Usage(format!("growth rate must be non-negative, got {lambda}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Usage(format!("normalization must be positive, got {alpha}")));
    }
    let states = integrate_mode(base, lambda, &base.xs, opts.ode_tol)?;
    let z: Vec<f64> = states.iter().map(|s| alpha * s[2]).collect();
    let zx: Vec<f64> = states.iter().map(|s| alpha * s[3]).collect();
    let terminal_slope = zx[zx.len() - 1];
    Ok(ShootingResult {
        lambda,
        alpha,
        xs: base.xs.clone(),
        z,
        zx,
        terminal_slope,
        converged: terminal_slope.abs() <= opts.shoot_tol * alpha,
    })
}

/// `Z′(L)` for `α = 1`.
pub fn terminal_slope(base: &BaseTables, lambda: f64, opts: &ShootingOptions) -> Result<f64> {
    let grid = [base.x0, base.length];
    Ok(integrate_mode(base, lambda, &grid, opts.ode_tol)?[1][3])
}

/// Terminal slopes on a uniform λ grid over `[lo, hi]`.
pub fn scan_terminal_slope(base: &BaseTables, lo: f64, hi: f64, n: usize, opts: &ShootingOptions) -> Result<Vec<(f64, f64)>> {
    let n = n.max(2);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let lambda = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            Ok((lambda, terminal_slope(base, lambda, opts)?))
        })
        .collect()
}

/// Sign changes of the terminal slope in a scan, as λ brackets.
pub fn sign_changes(scan: &[(f64, f64)]) -> Vec<(f64, f64)> {
    scan.windows(2).filter(|w| w[0].1.signum() != w[1].1.signum()).map(|w| (w[0].0, w[1].0)).collect()
}

/// Scans `[lo, hi]` for a sign change of `Z′(L)` and bisects the one at the
/// largest λ to `|Z′(L)| ≤ shoot_tol·α`.
pub fn find_unstable_mode(base: &BaseTables, bracket: (f64, f64), alpha: f64, opts: &ShootingOptions) -> Result<ShootingResult> {
    let (lo, hi) = bracket;
    let scan = scan_terminal_slope(base, lo, hi, opts.scan_points, opts)?;
    let Some(&(a, b)) = sign_changes(&scan).last() else {
        return Err(Error::NoModeFound { lo, hi });
    };
    let lambda = bisect(|l| terminal_slope(base, l, opts), a, b, opts.shoot_tol, 4.0 * f64::EPSILON * b, "growth-rate bisection")?;
    let mode = shoot(base, lambda, alpha, opts)?;
    if !mode.converged {
        return Err(Error::SolverFailure { what: "growth-rate bisection", lo: a, hi: b });
    }
    Ok(mode)
}

/// Relative sup-norm residual of the mode equation, with `Z″` from
/// fourth-order central differences of `Z′` on a grid of twice the base
/// resolution: `sup|r| / sup(|aZ″| + |(a′ − 2ūλ − Ē)Z′| + |(λ² + 2λū′ + ρ̄)Z|)`.
pub fn eigen_residual(base: &BaseTables, mode: &ShootingResult, opts: &ShootingOptions) -> Result<f64> {
    let m = 2 * base.n;
    let grid = uniform_grid(base.x0, base.length, m);
    let h = (base.length - base.x0) / m as f64;
    let states = integrate_mode(base, mode.lambda, &grid, opts.ode_tol)?;
    let b = &base.profile.b;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 2..m - 1 {
        let zxx = (-states[i + 2][3] + 8.0 * states[i + 1][3] - 8.0 * states[i - 1][3] + states[i - 2][3]) / (12.0 * h);
        let s = states[i];
        let (c, _) = mode_coefficients(&base.law, base.j, b.eval(grid[i]), s[0], s[1], mode.lambda)?;
        let t = [c.a * zxx, c.first * s[3], -c.zero * s[2]];
        num = num.max((t[0] + t[1] + t[2]).abs());
        den = den.max(t[0].abs() + t[1].abs() + t[2].abs());
    }
    Ok(num / den)
}

/// Growth rate measured by evolving the linearized problem from `(Z, λZ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCheck {
    pub measured: f64,
    pub predicted: f64,
    pub t_final: f64,
    pub r_squared: f64,
}

impl GrowthCheck {
    pub fn relative_error(&self) -> f64 {
        (self.measured / self.predicted - 1.0).abs()
    }
}

/// Evolves `(Z, λZ)` for `efolds/λ` time units and fits `log sup|Y|`.
pub fn time_domain_growth(base: &BaseTables, mode: &ShootingResult, efolds: f64, opts: &LinearOptions) -> Result<GrowthCheck> {
    if !(mode.lambda > 0.0) {
        return Err(Error::Usage("time-domain check needs a positive growth rate".into()));
    }
    let t_final = efolds / mode.lambda;
    let yt: Vec<f64> = mode.z.iter().map(|z| mode.lambda * z).collect();
    let run = evolve_linear(base, &mode.z, &yt, t_final, opts)?;
    let l = &run.ledger;
    let logs: Vec<f64> = l.sup_y.iter().map(|s| s.ln()).collect();
    let (slope, _, r2) = linear_fit(&l.times, &logs);
    Ok(GrowthCheck { measured: slope, predicted: mode.lambda, t_final, r_squared: r2 })
}

/// Descending scan of domain lengths.
#[derive(Debug, Clone, Copy)]
pub struct LengthScan {
    pub l_max: f64,
    pub l_min: f64,
    pub count: usize,
    /// Grid intervals of the base tables.
    pub grid: usize,
}

/// An unstable configuration.
#[derive(Debug, Clone)]
pub struct UnstableConfiguration {
    pub solution: TransonicSolution,
    pub base: BaseTables,
    pub length: f64,
    pub mode: ShootingResult,
    /// `Ē₊(x₀)`.
    pub field_at_shock: f64,
    /// Lengths tried before success, largest first.
    pub scanned: Vec<f64>,
}

/// Builds transonic solutions with the shock at `x0` for domain lengths from
/// `l_max` downwards and returns the first one whose linearization admits a
/// growing mode. The field at the shock must lie below `−c`.
#[allow(clippy::too_many_arguments)]
pub fn find_unstable_length(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    rho_l: f64,
    e_l: f64,
    x0: f64,
    c: f64,
    scan: &LengthScan,
    steady: &SteadyOptions,
    opts: &ShootingOptions,
) -> Result<UnstableConfiguration> {
    if !(scan.l_max > scan.l_min && scan.l_min > x0 && scan.count >= 1) {
        return Err(Error::Usage(format!("length scan must satisfy x0 < l_min < l_max, got {x0}, {}, {}", scan.l_min, scan.l_max)));
    }
    let sup = supersonic_base(law, j, b, scan.l_max, rho_l, e_l, steady)?;
    let mut scanned = Vec::new();
    for i in 0..scan.count {
        let length = if scan.count == 1 {
            scan.l_max
        } else {
            scan.l_max - (scan.l_max - scan.l_min) * i as f64 / (scan.count - 1) as f64
        };
        scanned.push(length);
        let solution = match solution_at(law, j, b, length, &sup, x0, steady) {
            Ok(s) => s,
            Err(Error::InfeasibleShockPosition { .. }) => continue,
            Err(e) => return Err(e),
        };
        let field = solution.downstream().e;
        if !(field < -c) {
            return Err(Error::HypothesisViolation { a: x0, detail: format!("field at the shock {field} is not below {}", -c) });
        }
        let base = build_base(&solution, scan.grid)?;
        match find_unstable_mode(&base, (0.0, lambda_upper(&base)), 1.0, opts) {
            Ok(mode) => {
                return Ok(UnstableConfiguration { solution, base, length, mode, field_at_shock: field, scanned });
            }
            Err(Error::NoModeFound { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoUnstableLength { lo: scan.l_min, hi: scan.l_max, scanned: scanned.len() })
}

impl UnstableConfiguration {
    /// Writes `lambda,L,E_shock,lambda_upper,terminal_slope,eigen_residual`.
    pub fn write_record<W: Write>(&self, mut w: W, eigen_residual: f64) -> io::Result<()> {
        writeln!(w, "lambda,L,x0,E_shock,lambda_upper,terminal_slope,eigen_residual")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            self.mode.lambda,
            self.length,
            self.base.x0,
            self.field_at_shock,
            lambda_upper(&self.base),
            self.mode.terminal_slope,
            eigen_residual
        )
    }

    pub fn sup_mode(&self) -> f64 {
        sup_norm(&self.mode.z)
    }
}
