//! Nonlinear evolution of the potential perturbation `Y = E₊ − Ē₊` on the
//! fixed domain `[x₀, L]` while the shock sits at `s(t) = x₀ + σ(t)`.
//!
//! The physical point is `X = s + (x̃ − x₀)/q₂` with `q₂ = (L − x₀)/(L − s)`.
//! With `V = ∂ₜY` at fixed `X` the system reads
//!
//! ```text
//! ∂ₜỸ = V + σ′ q₁ ∂Ỹ
//! ∂ₜṼ = σ′ q₁ ∂Ṽ + q₂ ∂F − ρ̄₊(X) Y − Ē₊(X) q₂ ∂Y − q₂ Y ∂Y
//! F   = 𝒫(ρ̄₊(X) + q₂ ∂Y, J̄ − V) − 𝒫(ρ̄₊(X), J̄),   𝒫(ρ, J) = p(ρ) + J²/ρ
//! ```
//!
//! where `∂ = ∂/∂x̃`. At the shock the frozen upstream state and the jump
//! relations give `σ = 𝒜₃(Y(x₀))`, the downstream density `ρ₊` from
//! `(𝒫(ρ₊, J̄ − V₀) − 𝒫₋)(ρ₊ − ρ₋) = V₀²`, the shock speed
//! `σ′ = −V₀/(ρ₊ − ρ₋)` and the boundary flux `𝒫₋ + V₀²/(ρ₊ − ρ₋) − 𝒫̄₊(s)`.
//! At `L` the exit density is held, so `∂Y = 0` there.
//!
//! The spatial discretization is conservative in the flux. Time stepping
//! splits the right-hand side into the exact linearization at the zero state,
//! handled by the weighted θ-scheme of the linear analyzer, and a quadratic
//! remainder fed to the same scheme as a source and iterated to convergence.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::linear::scheme::{LinearOperator, OperatorTerms, ThetaStepper};
use crate::linear::{project_slope, EnergyLedger, Snapshot, StepOptions};
use crate::numerics::linalg::{linear_fit, sup_norm};
use crate::subsonic::base::{BaseTables, TableState};

/// Map between the fixed and the physical coordinate for a shock displacement σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformJacobian {
    pub x0: f64,
    pub length: f64,
    pub sigma: f64,
}

impl TransformJacobian {
    pub fn new(x0: f64, length: f64, sigma: f64) -> Self {
        Self { x0, length, sigma }
    }

    /// `q₁ = (L − x̃)/(L − x₀ − σ)`.
    pub fn q1(&self, x: f64) -> f64 {
        (self.length - x) / (self.length - self.x0 - self.sigma)
    }

    /// `q₂ = (L − x₀)/(L − x₀ − σ)`.
    pub fn q2(&self) -> f64 {
        (self.length - self.x0) / (self.length - self.x0 - self.sigma)
    }

    /// Physical position of the fixed-domain point `x̃`.
    pub fn physical(&self, x: f64) -> f64 {
        self.x0 + self.sigma + (x - self.x0) / self.q2()
    }
}

/// State of the perturbed subsonic region.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    pub y: Vec<f64>,
    pub yt: Vec<f64>,
    pub sigma: f64,
    pub sigma_dot: f64,
    /// Downstream density at the shock.
    pub rho_plus: f64,
    /// `ρ₊ − ρ̄₊(x₀ + σ)`, the physical slope `∂ₓY` at the shock.
    pub shock_slope: f64,
}

/// Terms of the evolution. Everything is on for the physical problem; the
/// reduced variants exist for scheme-symmetry tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonlinearTerms {
    /// The `−ρ̄₊ Y` term.
    pub zero_order: bool,
    /// Shock coupling at `x₀`: the boundary flux and the moving frame.
    pub boundary: bool,
}

impl Default for NonlinearTerms {
    fn default() -> Self {
        Self { zero_order: true, boundary: true }
    }
}

impl NonlinearTerms {
    fn linear(&self) -> OperatorTerms {
        OperatorTerms { zero_order: self.zero_order, boundary: self.boundary }
    }
}

/// Momentum flux `p(ρ̄₊(x) + Y_x) + (J̄ − Y_t)²/(ρ̄₊(x) + Y_x)` of the
/// perturbed downstream state at physical position `x`.
pub fn nonlinear_flux(base: &BaseTables, yt: f64, yx: f64, x: f64) -> Result<f64> {
    let rho = base.plus_table.eval(x)?.rho + yx;
    checked_flux(base, rho, base.j - yt, x)
}

fn checked_flux(base: &BaseTables, rho: f64, j: f64, x: f64) -> Result<f64> {
    check_state(base, rho, j, x)?;
    Ok(base.law.momentum_flux(rho, j))
}

fn check_state(base: &BaseTables, rho: f64, j: f64, x: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::StateInvalid(format!("vacuum at x = {x}: rho = {rho}")));
    }
    if !(base.law.sonic_gap(rho, j) > 0.0) {
        return Err(Error::StateInvalid(format!("perturbed state not subsonic at x = {x}: rho = {rho}, J = {j}")));
    }
    Ok(())
}

/// Largest admissible shock displacement: the profile tables cover `x₀ ± δ`.
fn sigma_limit(base: &BaseTables) -> f64 {
    (base.x0 - base.minus_table.x_lo).min(base.minus_table.x_hi() - base.x0)
}

/// `σ = 𝒜₃(Y₀)`: the displacement at which the frozen upstream field and the
/// perturbed downstream field agree, `Ē₋(x₀+σ) = Ē₊(x₀+σ) + Y₀`.
pub fn shock_displacement(base: &BaseTables, y0: f64) -> Result<f64> {
    if y0 == 0.0 {
        return Ok(0.0);
    }
    let x0 = base.x0;
    let limit = sigma_limit(base);
    let mut sigma = y0 * base.coefficients.d_a3_dy;
    let mut g = f64::INFINITY;
    let mut g_scale = 0.0;
    for _ in 0..60 {
        if !(sigma.abs() < limit) {
            return Err(Error::StateInvalid(format!("shock displacement {sigma} leaves the tabulated range ±{limit}")));
        }
        let (_, dem) = base.minus_table.increment(sigma)?;
        let (_, dep) = base.plus_table.increment(sigma)?;
        g = dem - dep - y0;
        g_scale = dem.abs() + dep.abs() + y0.abs();
        if sigma.abs() > base.plus_table.dx.min(base.minus_table.dx) {
            // Beyond the cells next to x₀ the increments carry the absolute
            // round-off of the tabulated field.
            g_scale += base.plus_table.e[base.plus_table.anchor].abs() + base.minus_table.e[base.minus_table.anchor].abs();
        }
        let dg = base.minus_table.eval(x0 + sigma)?.de - base.plus_table.eval(x0 + sigma)?.de;
        let ds = g / dg;
        sigma -= ds;
        if ds.abs() <= 4.0 * f64::EPSILON * sigma.abs() {
            return Ok(sigma);
        }
    }
    // Round-off can stall the update short of the step test.
    if g.abs() <= 64.0 * f64::EPSILON * g_scale {
        Ok(sigma)
    } else {
        Err(Error::BoundarySolver { residual: g })
    }
}

/// Shock quantities determined by `(Y(x₀), Y_t(x₀))` through the jump relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockJump {
    pub sigma: f64,
    pub sigma_dot: f64,
    /// Downstream density `ρ₊`.
    pub rho_plus: f64,
    /// `ρ₊ − ρ̄₊(x₀ + σ)`, the physical slope `∂ₓY` at the shock.
    pub slope: f64,
    /// `𝒫₊ − 𝒫̄₊(x₀ + σ)` with the round-off mismatch `𝒫̄₋(x₀) − 𝒫̄₊(x₀)` of
    /// the base jump removed.
    pub flux: f64,
}

/// Solves the jump relations for the shock displaced by `σ = 𝒜₃(y0)` with
/// downstream current `J̄ − v0`. The downstream density is the subsonic root
/// of `(𝒫(ρ₊, J̄ − v0) − 𝒫₋)(ρ₊ − ρ₋) = v0²`, found by damped Newton in the
/// increment `ρ₊ − ρ̄₊(x₀ + σ)` starting from `slope_guess`.
pub fn solve_shock(base: &BaseTables, y0: f64, v0: f64, slope_guess: f64) -> Result<ShockJump> {
    let law = &base.law;
    let j = base.j;
    let sigma = shock_displacement(base, y0)?;
    let s = base.x0 + sigma;
    let rho_c = base.plus_table.eval(s)?.rho;
    let rho_m = base.minus_table.eval(s)?.rho;
    if y0 == 0.0 && v0 == 0.0 {
        return Ok(ShockJump { sigma, sigma_dot: 0.0, rho_plus: rho_c, slope: 0.0, flux: 0.0 });
    }
    // 𝒫̄₊(s) − 𝒫̄₋(s), from increments at x₀ so that it is accurate relative
    // to its own size.
    let (dp, _) = base.plus_table.increment(sigma)?;
    let (dm, _) = base.minus_table.increment(sigma)?;
    let rp0 = base.plus_table.rho[base.plus_table.anchor];
    let rm0 = base.minus_table.rho[base.minus_table.anchor];
    let dflux = law.momentum_flux_increment(rp0, j, dp, 0.0) - law.momentum_flux_increment(rm0, j, dm, 0.0);
    let jump0 = rho_c - rho_m;
    let jp = j - v0;
    let resid = |d: f64| (law.momentum_flux_increment(rho_c, j, d, v0) + dflux) * (jump0 + d) - v0 * v0;
    let mut d = slope_guess;
    let mut f = resid(d);
    let mut converged = false;
    for _ in 0..60 {
        let df = law.sonic_gap(rho_c + d, jp) * (jump0 + d) + law.momentum_flux_increment(rho_c, j, d, v0) + dflux;
        if !(df > 0.0) {
            return Err(Error::BoundarySolver { residual: f });
        }
        let delta = f / df;
        let mut lambda = 1.0;
        let (mut next, mut fnext);
        loop {
            next = d - lambda * delta;
            fnext = if jump0 + next > 0.0 { resid(next) } else { f64::INFINITY };
            if fnext.abs() <= f.abs() || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        let step = (next - d).abs();
        d = next;
        f = fnext;
        if f == 0.0 || step <= 4.0 * f64::EPSILON * d.abs() {
            converged = true;
            break;
        }
    }
    // Round-off can stall the update short of the step test.
    let f_scale = (law.momentum_flux_increment(rho_c, j, d, v0).abs() + dflux.abs()) * (jump0 + d).abs() + v0 * v0;
    if !converged && !(f.abs() <= 64.0 * f64::EPSILON * f_scale) {
        return Err(Error::BoundarySolver { residual: f });
    }
    let jump = jump0 + d;
    Ok(ShockJump { sigma, sigma_dot: -v0 / jump, rho_plus: rho_c + d, slope: d, flux: v0 * v0 / jump - dflux })
}

/// Downstream density `ρ₊` for `(Y(x₀), Y_t(x₀)) = (y0, v0)`.
pub fn boundary_density(base: &BaseTables, y0: f64, v0: f64) -> Result<f64> {
    Ok(solve_shock(base, y0, v0, 0.0)?.rho_plus)
}

/// Remainders of the right-hand side beyond its linearization.
struct Remainder {
    ry: Vec<f64>,
    rv: Vec<f64>,
    shock: ShockJump,
}

/// One-step evolution operator for a fixed step size.
pub struct NonlinearStepper<'a> {
    base: &'a BaseTables,
    stepper: ThetaStepper,
    terms: NonlinearTerms,
    /// Base state at the nodes and half nodes of the undisplaced grid.
    node: Vec<TableState>,
    half: Vec<TableState>,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl<'a> NonlinearStepper<'a> {
    pub fn new(base: &'a BaseTables, k: f64, c_theta: f64, terms: NonlinearTerms) -> Result<Self> {
        let op = LinearOperator::new(base, terms.linear());
        let node = base.xs.iter().map(|&x| base.plus_table.eval(x)).collect::<Result<Vec<_>>>()?;
        let half = base.xh.iter().map(|&x| base.plus_table.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base,
            stepper: ThetaStepper::new(op, k, c_theta),
            terms,
            node,
            half,
            picard_tol: 1e-12,
            picard_max: 30,
        })
    }

    pub fn dt(&self) -> f64 {
        self.stepper.k
    }

    pub fn theta(&self) -> f64 {
        self.stepper.theta
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.stepper.op
    }

    fn shock_state(&self, y0: f64, v0: f64, guess: f64) -> Result<ShockJump> {
        if !self.terms.boundary {
            return Ok(ShockJump { sigma: 0.0, sigma_dot: 0.0, rho_plus: self.node[0].rho, slope: 0.0, flux: 0.0 });
        }
        solve_shock(self.base, y0, v0, guess)
    }

    /// Nonlinear right-hand side minus its linearization at the zero state.
    fn remainder(&self, y: &[f64], v: &[f64], guess: f64) -> Result<Remainder> {
        let base = self.base;
        let n = y.len();
        let h = base.h;
        let j = base.j;
        let law = &base.law;
        let shock = self.shock_state(y[0], v[0], guess)?;
        let tr = TransformJacobian::new(base.x0, base.length, shock.sigma);
        let q2 = tr.q2();
        let sd = shock.sigma_dot;
        let moving = shock.sigma != 0.0;
        let d = |f: &[f64], i: usize| {
            if i == 0 {
                (f[1] - f[0]) / h
            } else if i == n - 1 {
                (f[n - 1] - f[n - 2]) / h
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        };
        // Nonlinear and linearized fluxes at x₀, the half nodes and L.
        let mut fnl = vec![0.0; n + 1];
        let mut flin = vec![0.0; n + 1];
        if self.terms.boundary {
            fnl[0] = shock.flux;
            flin[0] = self.node[0].e * y[0];
        }
        for i in 0..n - 1 {
            let bh = if moving { base.plus_table.eval(tr.physical(base.xh[i]))? } else { self.half[i] };
            let dy = (y[i + 1] - y[i]) / h;
            let vh = 0.5 * (v[i] + v[i + 1]);
            let x = base.xh[i];
            let rho = bh.rho + q2 * dy;
            check_state(base, rho, j - vh, x)?;
            fnl[i + 1] = law.momentum_flux_increment(bh.rho, j, q2 * dy, vh);
            let b0 = self.half[i];
            flin[i + 1] = law.sonic_gap(b0.rho, j) * dy - 2.0 * j / b0.rho * vh;
        }
        let vn = v[n - 1];
        fnl[n] = (vn * vn - 2.0 * j * vn) / self.node[n - 1].rho;
        flin[n] = -2.0 * j * vn / self.node[n - 1].rho;
        let mut ry = vec![0.0; n];
        let mut rv = vec![0.0; n];
        for i in 0..n {
            let quad = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            let bn = if moving { base.plus_table.eval(tr.physical(base.xs[i]))? } else { self.node[i] };
            let b0 = self.node[i];
            let dy = d(y, i);
            let q1 = tr.q1(base.xs[i]);
            let mut nl = q2 * (fnl[i + 1] - fnl[i]) / quad - bn.e * q2 * dy - q2 * y[i] * dy;
            let mut lin = (flin[i + 1] - flin[i]) / quad - b0.e * dy;
            if self.terms.zero_order {
                nl -= bn.rho * y[i];
                lin -= b0.rho * y[i];
            }
            if sd != 0.0 {
                nl += sd * q1 * d(v, i);
                ry[i] = sd * q1 * dy;
            }
            rv[i] = nl - lin;
        }
        Ok(Remainder { ry, rv, shock })
    }

    /// Advances the state by one step.
    pub fn step(&self, state: &PerturbationState) -> Result<PerturbationState> {
        let n = state.y.len();
        let k = self.stepper.k;
        let th = self.stepper.theta;
        let w = &self.stepper.op.w;
        let r0 = self.remainder(&state.y, &state.yt, state.shock_slope)?;
        let mut r1_y = r0.ry.clone();
        let mut r1_v = r0.rv.clone();
        let mut guess = r0.shock.slope;
        let mut last_change = f64::INFINITY;
        for _ in 0..self.picard_max {
            let sy: Vec<f64> = (0..n).map(|i| k * (th * r1_y[i] + (1.0 - th) * r0.ry[i])).collect();
            let sv: Vec<f64> = (0..n).map(|i| k * w[i] * (th * r1_v[i] + (1.0 - th) * r0.rv[i])).collect();
            let (y, v) = self.stepper.step(&state.y, &state.yt, Some(&sy), Some(&sv));
            let r = self.remainder(&y, &v, guess)?;
            // Converged once another sweep would move the state by less than
            // the tolerance relative to the state itself.
            let ka = k.abs();
            let scale = sup_norm(&y) + ka * sup_norm(&v);
            let change =
                ka * r.rv.iter().zip(&r1_v).chain(r.ry.iter().zip(&r1_y)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            guess = r.shock.slope;
            // A sweep that no longer reduces the change has hit round-off.
            let stalled = change >= 0.5 * last_change && change <= 1e3 * self.picard_tol * scale;
            if change <= self.picard_tol * scale || change == 0.0 || stalled {
                return Ok(PerturbationState {
                    t: state.t + k,
                    y,
                    yt: v,
                    sigma: r.shock.sigma,
                    sigma_dot: r.shock.sigma_dot,
                    rho_plus: r.shock.rho_plus,
                    shock_slope: r.shock.slope,
                });
            }
            last_change = change;
            r1_y = r.ry;
            r1_v = r.rv;
        }
        Err(Error::SolverFailure { what: "implicit step iteration", lo: state.t, hi: state.t + k })
    }
}

/// Builds a state at time `t` from `(Y, Y_t)` without altering it.
pub fn state_from(base: &BaseTables, t: f64, y: Vec<f64>, yt: Vec<f64>) -> Result<PerturbationState> {
    let sh = solve_shock(base, y[0], yt[0], 0.0)?;
    Ok(PerturbationState { t, sigma: sh.sigma, sigma_dot: sh.sigma_dot, rho_plus: sh.rho_plus, shock_slope: sh.slope, y, yt })
}

/// Adjusts `y` away from `x₀` so that its slope at the shock matches the one
/// implied by the jump relations for the given `Y(x₀)` and `Y_t(x₀)`.
pub fn project_initial(base: &BaseTables, mut y: Vec<f64>, yt: Vec<f64>) -> Result<PerturbationState> {
    let n = base.n + 1;
    if y.len() != n || yt.len() != n {
        return Err(Error::Usage(format!("initial data must have {n} samples")));
    }
    let state = state_from(base, 0.0, y.clone(), yt.clone())?;
    let q2 = TransformJacobian::new(base.x0, base.length, state.sigma).q2();
    project_slope(base, &mut y, state.shock_slope / q2);
    state_from(base, 0.0, y, yt)
}

/// Advances `state` by one step of size `dt`.
pub fn step(state: &PerturbationState, dt: f64, base: &BaseTables, c_theta: f64) -> Result<PerturbationState> {
    NonlinearStepper::new(base, dt, c_theta, NonlinearTerms::default())?.step(state)
}

#[derive(Debug, Clone)]
pub struct DynamicsOptions {
    pub step: StepOptions,
    /// Keep every n-th step in the trajectory.
    pub sample_every: usize,
    /// Blow-up is declared when `sup|Y| + |σ|` exceeds this multiple of its
    /// initial value.
    pub blowup_factor: f64,
    pub snapshot_times: Vec<f64>,
    pub terms: NonlinearTerms,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self { step: StepOptions::default(), sample_every: 10, blowup_factor: 1e3, snapshot_times: Vec::new(), terms: NonlinearTerms::default() }
    }
}

/// One row of the trajectory time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub sup_y: f64,
    pub sup_yt: f64,
    pub sup_yx: f64,
    pub sigma: f64,
    pub sigma_dot: f64,
    pub phi0: f64,
    /// `|σ − 𝒜₃(Y(x₀))|`.
    pub slaving_residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub snapshots: Vec<Snapshot>,
    /// `sup|Y| + |σ|` exceeded the blow-up threshold and the run stopped.
    pub instability_detected: bool,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,sup_Y,sup_Yt,sup_Yx,sigma,sigma_dot,phi0")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{},{},{}", s.t, s.sup_y, s.sup_yt, s.sup_yx, s.sigma, s.sigma_dot, s.phi0)?;
        }
        Ok(())
    }

    pub fn max_slaving_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.slaving_residual).fold(0.0, f64::max)
    }
}

/// Least-squares rate of `log(sup|Y| + |σ|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeFit {
    /// Amplitude decay rate; negative when the perturbation grows.
    pub lambda: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone)]
pub struct DynamicsRun {
    pub dt: f64,
    pub trajectory: Trajectory,
    pub ledger: EnergyLedger,
    /// `None` for identically zero data.
    pub fit: Option<AmplitudeFit>,
    pub final_state: PerturbationState,
}

fn sample(base: &BaseTables, op: &LinearOperator, st: &PerturbationState) -> Result<TrajectorySample> {
    let n = st.y.len();
    let q2 = TransformJacobian::new(base.x0, base.length, st.sigma).q2();
    let sup_yx = (0..n - 1).map(|i| ((st.y[i + 1] - st.y[i]) / base.h).abs()).fold(0.0, f64::max) * q2;
    let slaving = (st.sigma - shock_displacement(base, st.y[0])?).abs();
    Ok(TrajectorySample {
        t: st.t,
        sup_y: sup_norm(&st.y),
        sup_yt: sup_norm(&st.yt),
        sup_yx,
        sigma: st.sigma,
        sigma_dot: st.sigma_dot,
        phi0: op.energy(&st.y, &st.yt),
        slaving_residual: slaving,
    })
}

/// Evolves projected initial data to `t_final`, recording the trajectory and
/// energy ledger, and fits the amplitude decay over the tail half of the run.
pub fn evolve_and_measure(base: &BaseTables, y: &[f64], yt: &[f64], t_final: f64, opts: &DynamicsOptions) -> Result<DynamicsRun> {
    let (steps, k) = opts.step.resolve(base, t_final)?;
    let stepper = NonlinearStepper::new(base, k, opts.step.c_theta, opts.terms)?;
    let op = stepper.operator().clone();
    let mut state = project_initial(base, y.to_vec(), yt.to_vec())?;
    let every = opts.sample_every.max(1);
    let mut trajectory = Trajectory::default();
    let mut ledger = EnergyLedger { phi: vec![Vec::new()], travel_time: base.round_trip_time(), ..EnergyLedger::default() };
    let mut snap_iter = opts.snapshot_times.iter().copied().peekable();
    let phi00 = op.energy(&state.y, &state.yt);
    let amp0 = sup_norm(&state.y) + state.sigma.abs();
    let mut d0 = 0.0;
    let mut rate_prev = op.dissipation_rate(&state.yt);
    for s in 0..=steps {
        if s > 0 {
            state = stepper.step(&state)?;
            let rate = op.dissipation_rate(&state.yt);
            d0 += 0.5 * k * (rate_prev + rate);
            rate_prev = rate;
        }
        let amp = sup_norm(&state.y) + state.sigma.abs();
        let blown = amp > opts.blowup_factor * amp0;
        if s % every == 0 || s == steps || blown {
            let row = sample(base, &op, &state)?;
            ledger.times.push(state.t);
            ledger.phi[0].push(row.phi0);
            ledger.d0.push(d0);
            ledger.identity_residual.push(row.phi0 + d0 - phi00);
            ledger.y_x0.push(state.y[0]);
            ledger.yt_x0.push(state.yt[0]);
            ledger.yx_x0.push(state.shock_slope);
            ledger.sup_y.push(row.sup_y);
            trajectory.samples.push(row);
        }
        while let Some(&ts) = snap_iter.peek() {
            if ts <= state.t + 0.5 * k {
                trajectory.snapshots.push(Snapshot { t: state.t, y: state.y.clone(), yt: state.yt.clone() });
                snap_iter.next();
            } else {
                break;
            }
        }
        if blown {
            trajectory.instability_detected = true;
            break;
        }
    }
    let fit = fit_amplitude(&trajectory);
    Ok(DynamicsRun { dt: k, trajectory, ledger, fit, final_state: state })
}

/// Fits `log(sup|Y| + |σ|)` against time over the second half of the samples.
/// Returns `None` when the data vanish identically.
pub fn fit_amplitude(trajectory: &Trajectory) -> Option<AmplitudeFit> {
    let s = &trajectory.samples;
    if s.len() < 4 {
        return None;
    }
    let tail = &s[s.len() / 2..];
    if tail.iter().any(|r| !(r.sup_y + r.sigma.abs() > 0.0)) {
        return None;
    }
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let ls: Vec<f64> = tail.iter().map(|r| (r.sup_y + r.sigma.abs()).ln()).collect();
    let (slope, _, r2) = linear_fit(&ts, &ls);
    Some(AmplitudeFit { lambda: -slope, r_squared: r2 })
}
