//! Linearized subsonic problem: evolution with an energy ledger, decay-rate
//! fitting, solution-operator spectrum, characteristic frame and the boundary
//! observability check.

pub mod characteristic;
pub mod observability;
pub mod scheme;
pub mod spectrum;

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::linalg::{linear_fit, sup_norm};
use crate::subsonic::base::BaseTables;
use scheme::{LinearOperator, OperatorTerms, ThetaStepper};

/// Time-stepping controls shared by the linear and nonlinear solvers.
#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    /// Courant number used when `dt` is not given.
    pub cfl: f64,
    /// Largest admissible Courant number.
    pub cfl_max: f64,
    /// Slope of `θ = ½ + c_θ Δt`.
    pub c_theta: f64,
    pub dt: Option<f64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { cfl: 0.5, cfl_max: 1.0, c_theta: 4.0, dt: None }
    }
}

impl StepOptions {
    /// Step count and step size reaching `t_final` exactly.
    pub fn resolve(&self, base: &BaseTables, t_final: f64) -> Result<(usize, f64)> {
        let smax = base.max_wave_speed();
        let k_nom = self.dt.unwrap_or(self.cfl * base.h / smax);
        if !(k_nom > 0.0) {
            return Err(Error::Usage(format!("time step must be positive, got {k_nom}")));
        }
        let courant = k_nom * smax / base.h;
        if courant > self.cfl_max * (1.0 + 1e-12) {
            return Err(Error::Usage(format!("CFL violation: Courant number {courant} exceeds {}", self.cfl_max)));
        }
        if t_final <= 0.0 {
            return Ok((0, k_nom));
        }
        let steps = (t_final / k_nom - 1e-9).ceil().max(1.0) as usize;
        Ok((steps, t_final / steps as f64))
    }
}

#[derive(Debug, Clone)]
pub struct LinearOptions {
    pub step: StepOptions,
    /// Highest time-derivative order in the ledger.
    pub m_max: usize,
    /// Times at which full states are kept.
    pub snapshot_times: Vec<f64>,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self { step: StepOptions::default(), m_max: 2, snapshot_times: Vec::new() }
    }
}

/// Energies, dissipation and boundary traces sampled at every step.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    /// `phi[m][s]` = φ_m at sample `s`.
    pub phi: Vec<Vec<f64>>,
    /// Cumulative boundary dissipation D₀.
    pub d0: Vec<f64>,
    /// `φ₀(t) + D₀(t) − φ₀(0)`.
    pub identity_residual: Vec<f64>,
    /// `Y(t, x₀)`.
    pub y_x0: Vec<f64>,
    /// `Y_t(t, x₀)`.
    pub yt_x0: Vec<f64>,
    /// `Y_x(t, x₀)` from the boundary relation.
    pub yx_x0: Vec<f64>,
    /// `sup |Y(t, ·)|`.
    pub sup_y: Vec<f64>,
    /// Round-trip travel time across the subsonic region.
    pub travel_time: f64,
}

impl EnergyLedger {
    /// `φ̂₁ = φ₀ + φ₁` (or φ₀ alone when only one level is recorded).
    pub fn phi_hat1(&self) -> Vec<f64> {
        match self.phi.len() {
            0 => Vec::new(),
            1 => self.phi[0].clone(),
            _ => self.phi[0].iter().zip(&self.phi[1]).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs_identity_residual(&self) -> f64 {
        sup_norm(&self.identity_residual)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for m in 0..self.phi.len() {
            write!(w, ",phi{m}")?;
        }
        writeln!(w, ",D0,identity_residual,Y_x0,Yt_x0,Yx_x0,sup_Y")?;
        for s in 0..self.times.len() {
            write!(w, "{}", self.times[s])?;
            for m in 0..self.phi.len() {
                write!(w, ",{}", self.phi[m][s])?;
            }
            writeln!(
                w,
                ",{},{},{},{},{},{}",
                self.d0[s], self.identity_residual[s], self.y_x0[s], self.yt_x0[s], self.yx_x0[s], self.sup_y[s]
            )?;
        }
        Ok(())
    }
}

/// A state snapshot `(t, Y, Y_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub y: Vec<f64>,
    pub yt: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LinearRun {
    pub dt: f64,
    pub theta: f64,
    pub final_state: Snapshot,
    pub snapshots: Vec<Snapshot>,
    pub ledger: EnergyLedger,
}

/// φ_m for m = 0..=m_max: φ₀ applied to `A^m U`.
fn phi_levels(op: &LinearOperator, y: &[f64], v: &[f64], m_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut cy = y.to_vec();
    let mut cv = v.to_vec();
    for m in 0..=m_max {
        out.push(op.energy(&cy, &cv));
        if m < m_max {
            let acc = op.accel(&cy, &cv);
            cy = cv;
            cv = acc;
        }
    }
    out
}

/// Adds `β ψ` to `y` so that the discrete initial data satisfy the boundary
/// relation `Y_x = d₁ Y_t + e₁ Y` at `x₀`, where `ψ(x₀) = 0`, `ψ′(x₀) = 1` and
/// `ψ′(L) = 0`; the Neumann condition at `L` is left as given.
pub fn project_compatible(base: &BaseTables, y: &mut [f64], yt: &[f64]) {
    let target = base.coefficients.d1_0 * yt[0] + base.coefficients.e1_0 * y[0];
    project_slope(base, y, target);
}

/// Adds a multiple of the corrector so that the one-sided slope at `x₀`
/// equals `target`.
pub(crate) fn project_slope(base: &BaseTables, y: &mut [f64], target: f64) {
    let ell = base.length - base.x0;
    let psi = |x: f64| {
        let s = x - base.x0;
        s * (1.0 - s / ell).powi(2)
    };
    // Second-order one-sided slope of the corrector and of y at x₀.
    let h = base.h;
    let slope = |f0: f64, f1: f64, f2: f64| (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    let current = slope(y[0], y[1], y[2]);
    let dpsi = slope(psi(base.xs[0]), psi(base.xs[1]), psi(base.xs[2]));
    let beta = (target - current) / dpsi;
    for (yi, &x) in y.iter_mut().zip(&base.xs) {
        *yi += beta * psi(x);
    }
}

/// Evolves the linearized problem from `(h1, h2)` to `t_final`.
pub fn evolve_linear(base: &BaseTables, h1: &[f64], h2: &[f64], t_final: f64, opts: &LinearOptions) -> Result<LinearRun> {
    evolve_linear_with_terms(base, h1, h2, t_final, opts, OperatorTerms::default())
}

pub fn evolve_linear_with_terms(
    base: &BaseTables,
    h1: &[f64],
    h2: &[f64],
    t_final: f64,
    opts: &LinearOptions,
    terms: OperatorTerms,
) -> Result<LinearRun> {
    let n = base.n + 1;
    if h1.len() != n || h2.len() != n {
        return Err(Error::Usage(format!("initial data must have {n} samples")));
    }
    let (steps, k) = opts.step.resolve(base, t_final)?;
    let op = LinearOperator::new(base, terms);
    let stepper = ThetaStepper::new(op, k, opts.step.c_theta);
    let op = &stepper.op;
    let mut y = h1.to_vec();
    let mut v = h2.to_vec();
    let mut ledger = EnergyLedger {
        phi: vec![Vec::with_capacity(steps + 1); opts.m_max + 1],
        travel_time: base.round_trip_time(),
        ..EnergyLedger::default()
    };
    let mut snapshots = Vec::new();
    let mut snap_iter = opts.snapshot_times.iter().copied().peekable();
    let mut d0 = 0.0;
    let mut rate_prev = op.dissipation_rate(&v);
    let phi00 = op.energy(&y, &v);
    for s in 0..=steps {
        let t = s as f64 * k;
        if s > 0 {
            let (yn, vn) = stepper.step(&y, &v, None, None);
            y = yn;
            v = vn;
            let rate = op.dissipation_rate(&v);
            d0 += 0.5 * k * (rate_prev + rate);
            rate_prev = rate;
        }
        let levels = phi_levels(op, &y, &v, opts.m_max);
        ledger.times.push(t);
        for (m, p) in levels.iter().enumerate() {
            ledger.phi[m].push(*p);
        }
        ledger.d0.push(d0);
        ledger.identity_residual.push(levels[0] + d0 - phi00);
        ledger.y_x0.push(y[0]);
        ledger.yt_x0.push(v[0]);
        ledger.yx_x0.push(op.boundary_slope(y[0], v[0]));
        ledger.sup_y.push(sup_norm(&y));
        while let Some(&ts) = snap_iter.peek() {
            if ts <= t + 0.5 * k {
                snapshots.push(Snapshot { t, y: y.clone(), yt: v.clone() });
                snap_iter.next();
            } else {
                break;
            }
        }
    }
    Ok(LinearRun {
        dt: k,
        theta: stepper.theta,
        final_state: Snapshot { t: steps as f64 * k, y, yt: v },
        snapshots,
        ledger,
    })
}

/// Fitted decay of φ̂₁.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// `−d/dt log φ̂₁` over the tail (an energy rate).
    pub lambda0: f64,
    /// Contraction window T.
    pub window: f64,
    /// `φ̂₁(t+T)/φ̂₁(t)` for consecutive windows starting at the tail.
    pub alpha0_per_window: Vec<f64>,
    pub r_squared: f64,
    /// Set when φ̂₁ grows over the tail.
    pub unstable: bool,
}

/// Mean spacing of sign changes of `y` over samples `from..`, if at least
/// three crossings occur.
fn crossing_spacing(times: &[f64], y: &[f64], from: usize) -> Option<f64> {
    let mut crossings = Vec::new();
    for s in from.max(1)..y.len() {
        if y[s - 1] != 0.0 && y[s - 1].signum() != y[s].signum() {
            let t = times[s - 1] + (times[s] - times[s - 1]) * y[s - 1] / (y[s - 1] - y[s]);
            crossings.push(t);
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Log-linear interpolation of the magnitude of a series.
fn interp_log(times: &[f64], f: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[i - 1], times[i]);
    let (a, b) = (f[i - 1].abs().max(1e-300).ln(), f[i].abs().max(1e-300).ln());
    (a + (b - a) * (t - t0) / (t1 - t0)).exp()
}

/// Least-squares rate of `log |φ̂₁|` on the second half of the ledger.
///
/// The magnitude is fitted because φ̂₁ is indefinite when `Ē₊(x₀) < 0`; along
/// a single growing mode it still scales like `e^{2λt}` whatever its sign.
///
/// The contraction window T is the mean spacing of sign changes of `Y(t, x₀)`
/// over the tail, which for an oscillating dominant mode equals the ripple
/// period of the energy; without oscillation the round-trip travel time is
/// used. The ledger must span at least five windows.
pub fn fit_decay_rate(ledger: &EnergyLedger) -> Result<DecayFit> {
    let phi = ledger.phi_hat1();
    let ns = phi.len();
    if ns < 4 {
        return Err(Error::Usage("ledger too short to fit".into()));
    }
    let t = &ledger.times;
    let span = t[ns - 1] - t[0];
    let tail = ns / 2;
    let window = crossing_spacing(t, &ledger.y_x0, tail).unwrap_or(ledger.travel_time);
    if !(window > 0.0) || span < 5.0 * window {
        return Err(Error::Usage(format!("ledger spans {span}, fewer than five windows of {window}")));
    }
    let xs = &t[tail..];
    let ys: Vec<f64> = phi[tail..].iter().map(|p| p.abs().max(1e-300).ln()).collect();
    let (slope, _, r2) = linear_fit(xs, &ys);
    let mut alpha = Vec::new();
    let mut t0 = t[tail];
    while t0 + window <= t[ns - 1] + 1e-12 {
        alpha.push(interp_log(t, &phi, t0 + window) / interp_log(t, &phi, t0));
        t0 += window;
    }
    Ok(DecayFit { lambda0: -slope, window, alpha0_per_window: alpha, r_squared: r2, unstable: slope > 0.0 })
}

/// Smooth pseudo-random initial data `(h1, h2)` from a seed: a few cosine
/// modes (which satisfy the Neumann condition at `L`) with uniform random
/// amplitudes, made compatible at `x₀` by [`project_compatible`].
pub fn random_initial_data(base: &BaseTables, seed: u64, amplitude: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ell = base.length - base.x0;
    let modes = 6;
    let a: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mode = |coef: &[f64], x: f64| -> f64 {
        coef.iter()
            .enumerate()
            .map(|(m, c)| c * (std::f64::consts::PI * m as f64 * (x - base.x0) / ell).cos() / (1.0 + m as f64))
            .sum::<f64>()
    };
    let mut h1: Vec<f64> = base.xs.iter().map(|&x| amplitude * mode(&a, x)).collect();
    let h2: Vec<f64> = base.xs.iter().map(|&x| amplitude * mode(&b, x)).collect();
    project_compatible(base, &mut h1, &h2);
    (h1, h2)
}

/// Gaussian bump of the given amplitude centred in the subsonic region.
pub fn bump_initial_data(base: &BaseTables, amplitude: f64) -> (Vec<f64>, Vec<f64>) {
    let ell = base.length - base.x0;
    let centre = base.x0 + 0.5 * ell;
    let width = 0.1 * ell;
    let mut h1: Vec<f64> = base.xs.iter().map(|&x| amplitude * (-((x - centre) / width).powi(2)).exp()).collect();
    let h2 = vec![0.0; h1.len()];
    project_compatible(base, &mut h1, &h2);
    (h1, h2)
}
