//! Steady field system `ρ′ = ρE/(p′(ρ) − J²/ρ²)`, `E′ = ρ − b(x)`.

use std::io::{self, Write};

use crate::eos::{regime_with_band, sonic_density, FlowPoint, PressureLaw, Regime};
use crate::error::{Error, Result};
use crate::numerics::rk::{integrate_to, integrate_to_grid, RkOptions};

/// Shape of the base background charge.
#[derive(Debug, Clone, PartialEq)]
pub enum ChargeProfile {
    Constant(f64),
    /// `Σ c_k x^k`.
    Polynomial(Vec<f64>),
    /// `mean + Σ (a_k cos(2πkx/period) + b_k sin(2πkx/period))`, k from 1.
    Fourier { mean: f64, cos: Vec<f64>, sin: Vec<f64>, period: f64 },
    /// Piecewise-linear interpolation of samples, constant beyond the ends.
    Sampled { xs: Vec<f64>, values: Vec<f64> },
}

/// Unit-sup-norm perturbation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationShape {
    ConstantOffset,
    /// Gaussian centred at L/2 with width L/8, peak value 1.
    Bump,
    /// `sin(2πx/L)`.
    Sinusoid,
}

impl PerturbationShape {
    pub const ALL: [PerturbationShape; 3] =
        [PerturbationShape::ConstantOffset, PerturbationShape::Bump, PerturbationShape::Sinusoid];

    /// Value at `x` of the unit-amplitude member on `[0, length]`.
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            PerturbationShape::ConstantOffset => 1.0,
            PerturbationShape::Bump => {
                let z = (x - 0.5 * length) / (0.125 * length);
                (-z * z).exp()
            }
            PerturbationShape::Sinusoid => (2.0 * std::f64::consts::PI * x / length).sin(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PerturbationShape::ConstantOffset => "constant_offset",
            PerturbationShape::Bump => "bump",
            PerturbationShape::Sinusoid => "sinusoid",
        }
    }
}

/// Background charge `b(x)` on `[0, length]`, optionally with a perturbation
/// `ε·shape(x)` added on top of the base profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundCharge {
    pub profile: ChargeProfile,
    pub length: f64,
    pub perturbation: Option<(PerturbationShape, f64)>,
}

impl BackgroundCharge {
    pub fn constant(b: f64, length: f64) -> Self {
        Self { profile: ChargeProfile::Constant(b), length, perturbation: None }
    }

    pub fn new(profile: ChargeProfile, length: f64) -> Result<Self> {
        if let ChargeProfile::Sampled { xs, values } = &profile {
            if xs.len() < 2 || xs.len() != values.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain("sampled charge needs >= 2 strictly increasing abscissae".into()));
            }
        }
        if let ChargeProfile::Fourier { cos, sin, period, .. } = &profile {
            if cos.len() != sin.len() || !(*period > 0.0) {
                return Err(Error::Domain("Fourier charge needs matching cos/sin lists and a positive period".into()));
            }
        }
        Ok(Self { profile, length, perturbation: None })
    }

    /// Copy with `ε·shape` added; `ε` is the sup norm of the perturbation.
    pub fn perturbed(&self, shape: PerturbationShape, eps: f64) -> Self {
        let mut b = self.clone();
        b.perturbation = Some((shape, eps));
        b
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = match &self.profile {
            ChargeProfile::Constant(c) => *c,
            ChargeProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
            ChargeProfile::Fourier { mean, cos, sin, period } => {
                let w = 2.0 * std::f64::consts::PI * x / period;
                let mut s = *mean;
                for (k, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let kw = (k + 1) as f64 * w;
                    s += a * kw.cos() + b * kw.sin();
                }
                s
            }
            ChargeProfile::Sampled { xs, values } => {
                let n = xs.len();
                if x <= xs[0] {
                    values[0]
                } else if x >= xs[n - 1] {
                    values[n - 1]
                } else {
                    let i = xs.partition_point(|&t| t <= x) - 1;
                    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                    values[i] + t * (values[i + 1] - values[i])
                }
            }
        };
        match self.perturbation {
            Some((shape, eps)) => base + eps * shape.eval(x, self.length),
            None => base,
        }
    }

    /// Sampled `(min, max)` of `b` over `[0, length]` (2049 points plus any
    /// sample abscissae, which are the only kinks).
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: f64| {
            let v = self.eval(x);
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for i in 0..=2048 {
            visit(self.length * i as f64 / 2048.0);
        }
        if let ChargeProfile::Sampled { xs, .. } = &self.profile {
            for &x in xs.iter().filter(|&&x| (0.0..=self.length).contains(&x)) {
                visit(x);
            }
        }
        (lo, hi)
    }
}

/// Integration settings for the steady system.
#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Local error tolerance (absolute and relative).
    pub tol: f64,
    /// Output intervals per unit length; at least 64 intervals are used.
    pub intervals_per_unit: usize,
    /// Relative sonic band: integration stops where
    /// `|p′ − J²/ρ²| < sonic_band · p′(ρ_s)`.
    pub sonic_band: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { tol: 1e-10, intervals_per_unit: 4096, sonic_band: 1e-8 }
    }
}

impl SteadyOptions {
    pub fn rk(&self) -> RkOptions {
        RkOptions::with_tol(self.tol)
    }

    pub fn intervals_for(&self, length: f64) -> usize {
        ((self.intervals_per_unit as f64 * length.abs()).ceil() as usize).max(64)
    }
}

/// Right-hand side `(ρ′, E′)` of the steady system.
pub fn rhs(law: &PressureLaw, j: f64, b_at_x: f64, point: &FlowPoint) -> Result<(f64, f64)> {
    let rho_s = sonic_density(law, j)?;
    rhs_banded(law, j, b_at_x, point.rho, point.e, f64::NAN, DEFAULT_GUARD * law.dp(rho_s))
}

const DEFAULT_GUARD: f64 = 1e-8;

/// Right-hand side with an explicit absolute guard on `|p′ − J²/ρ²|`.
/// `x` only labels the error.
pub(crate) fn rhs_banded(law: &PressureLaw, j: f64, b: f64, rho: f64, e: f64, x: f64, guard: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) || !rho.is_finite() || !e.is_finite() {
        return Err(Error::Singularity { x, rho });
    }
    let gap = law.sonic_gap(rho, j);
    if gap.abs() < guard {
        return Err(Error::Singularity { x, rho });
    }
    Ok((rho * e / gap, rho - b))
}

/// Sampled steady solution on one side of the shock.
#[derive(Debug, Clone)]
pub struct SteadyProfile {
    pub xs: Vec<f64>,
    pub rho: Vec<f64>,
    pub e: Vec<f64>,
    pub j: f64,
    pub regime: Regime,
    pub law: PressureLaw,
    pub b: BackgroundCharge,
    pub opts: SteadyOptions,
}

/// The system wrapped for the generic integrator, with a sonic guard and a
/// record of the most recent evaluation point.
struct SteadySystem<'a> {
    law: &'a PressureLaw,
    b: &'a BackgroundCharge,
    j: f64,
    guard: f64,
    last: (f64, f64),
}

impl SteadySystem<'_> {
    fn eval(&mut self, x: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        self.last = (x, y[0]);
        let (dr, de) = rhs_banded(self.law, self.j, self.b.eval(x), y[0], y[1], x, self.guard)?;
        Ok([dr, de])
    }
}

/// Integrates on `grid` (monotone, either direction). On failure the error is
/// returned together with the samples accepted so far. A step-size collapse
/// close to the sonic state is reported as a singularity.
pub(crate) fn integrate_on_grid(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    grid: &[f64],
    initial: [f64; 2],
    opts: &SteadyOptions,
) -> Result<Vec<[f64; 2]>> {
    let rho_s = sonic_density(law, j)?;
    let dps = law.dp(rho_s);
    let mut sys = SteadySystem { law, b, j, guard: opts.sonic_band * dps, last: (grid[0], initial[0]) };
    let res = integrate_to_grid(|x, y: &[f64; 2]| sys.eval(x, y), grid, initial, &opts.rk());
    match res {
        Err(Error::StepUnderflow { x }) => {
            let (lx, lr) = sys.last;
            if law.sonic_gap(lr, j).abs() < 1e-2 * dps {
                Err(Error::Singularity { x: lx, rho: lr })
            } else {
                Err(Error::StepUnderflow { x })
            }
        }
        other => other,
    }
}

/// Uniform grid with `n` intervals between `a` and `b` (endpoints exact).
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    g[n] = b;
    g
}

/// Integrates from `from_x` to `to_x` (`from_x < to_x`) starting at `initial`.
pub fn integrate(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    from_x: f64,
    to_x: f64,
    initial: FlowPoint,
    opts: &SteadyOptions,
) -> Result<SteadyProfile> {
    if !(from_x < to_x) {
        return Err(Error::Usage(format!("integrate needs from_x < to_x (got {from_x}, {to_x})")));
    }
    let grid = uniform_grid(from_x, to_x, opts.intervals_for(to_x - from_x));
    integrate_profile_on(law, j, b, grid, initial, opts)
}

/// As [`integrate`] but on a caller-supplied increasing grid.
pub fn integrate_profile_on(
    law: &PressureLaw,
    j: f64,
    b: &BackgroundCharge,
    grid: Vec<f64>,
    initial: FlowPoint,
    opts: &SteadyOptions,
) -> Result<SteadyProfile> {
    if (initial.j - j).abs() > 0.0 {
        return Err(Error::Usage("initial point carries a different mass flux".into()));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("output grid must be strictly increasing with >= 2 points".into()));
    }
    let rho_s = sonic_density(law, j)?;
    let regime = regime_with_band(rho_s, initial.rho, sonic_tolerance(law, j, rho_s, opts));
    if regime == Regime::Sonic {
        return Err(Error::Singularity { x: grid[0], rho: initial.rho });
    }
    let states = integrate_on_grid(law, j, b, &grid, [initial.rho, initial.e], opts)?;
    let profile = SteadyProfile {
        rho: states.iter().map(|s| s[0]).collect(),
        e: states.iter().map(|s| s[1]).collect(),
        xs: grid,
        j,
        regime,
        law: *law,
        b: b.clone(),
        opts: *opts,
    };
    if let Some(i) = profile.first_regime_violation() {
        return Err(Error::Singularity { x: profile.xs[i], rho: profile.rho[i] });
    }
    Ok(profile)
}

/// Density half-width of the sonic band implied by the guard on `p′ − J²/ρ²`.
fn sonic_tolerance(law: &PressureLaw, j: f64, rho_s: f64, opts: &SteadyOptions) -> f64 {
    let slope = law.sonic_gap_derivative(rho_s, j);
    (opts.sonic_band * law.dp(rho_s) / slope).min(1e-8 * rho_s).max(0.0)
}

impl SteadyProfile {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_start(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_end(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn point(&self, i: usize) -> FlowPoint {
        FlowPoint::new(self.rho[i], self.e[i], self.j)
    }

    pub fn first(&self) -> FlowPoint {
        self.point(0)
    }

    pub fn last(&self) -> FlowPoint {
        self.point(self.len() - 1)
    }

    fn guard(&self) -> f64 {
        let rho_s = sonic_density(&self.law, self.j).expect("profile flux is valid");
        self.opts.sonic_band * self.law.dp(rho_s)
    }

    /// `(ρ′, E′)` at grid point `i` from the right-hand side.
    pub fn derivative(&self, i: usize) -> (f64, f64) {
        let x = self.xs[i];
        rhs_banded(&self.law, self.j, self.b.eval(x), self.rho[i], self.e[i], x, 0.0)
            .expect("stored profile is outside the sonic band")
    }

    /// State at an arbitrary `x` inside the profile, by re-integrating from the
    /// nearest grid point at the profile tolerance.
    pub fn state_at(&self, x: f64) -> Result<FlowPoint> {
        if x < self.x_start() - 1e-14 || x > self.x_end() + 1e-14 {
            return Err(Error::Usage(format!("x = {x} outside profile [{}, {}]", self.x_start(), self.x_end())));
        }
        let i = self.xs.partition_point(|&t| t <= x).clamp(1, self.len()) - 1;
        let i = if i + 1 < self.len() && (self.xs[i + 1] - x) < (x - self.xs[i]) { i + 1 } else { i };
        if self.xs[i] == x {
            return Ok(self.point(i));
        }
        let guard = self.guard();
        let mut opts = self.opts.rk();
        opts.h_init = Some((x - self.xs[i]).abs());
        let y = integrate_to(
            |t, y: &[f64; 2]| {
                let (a, b) = rhs_banded(&self.law, self.j, self.b.eval(t), y[0], y[1], t, guard)?;
                Ok([a, b])
            },
            self.xs[i],
            x,
            [self.rho[i], self.e[i]],
            &opts,
        )?;
        Ok(FlowPoint::new(y[0], y[1], self.j))
    }

    /// `|E(end) − E(start) − ∫(ρ − b)|` with the trapezoid rule on the grid.
    pub fn poisson_residual(&self) -> f64 {
        let mut integral = 0.0;
        for i in 1..self.len() {
            let f0 = self.rho[i - 1] - self.b.eval(self.xs[i - 1]);
            let f1 = self.rho[i] - self.b.eval(self.xs[i]);
            integral += 0.5 * (f0 + f1) * (self.xs[i] - self.xs[i - 1]);
        }
        (self.e[self.len() - 1] - self.e[0] - integral).abs()
    }

    /// Index of the first grid point whose regime differs from the tag.
    pub fn first_regime_violation(&self) -> Option<usize> {
        let rho_s = sonic_density(&self.law, self.j).ok()?;
        let tol = sonic_tolerance(&self.law, self.j, rho_s, &self.opts);
        self.rho.iter().position(|&r| regime_with_band(rho_s, r, tol) != self.regime)
    }

    /// Writes `x,rho,E,u,mach` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,rho,E,u,mach")?;
        for i in 0..self.len() {
            let u = self.j / self.rho[i];
            let mach = u / self.law.sound_speed(self.rho[i]);
            writeln!(w, "{},{},{},{},{}", self.xs[i], self.rho[i], self.e[i], u, mach)?;
        }
        Ok(())
    }
}

/// `(sup|ρ − ρ₀|, sup|ρ′ − ρ₀′|)` between two profiles on the same grid, with
/// derivatives taken from the right-hand side of each profile.
pub fn perturbation_growth(base: &SteadyProfile, perturbed: &SteadyProfile) -> Result<(f64, f64)> {
    if base.len() != perturbed.len() || base.xs.iter().zip(&perturbed.xs).any(|(a, b)| (a - b).abs() > 1e-14 * (1.0 + a.abs())) {
        return Err(Error::Usage("perturbation_growth needs profiles on the same grid".into()));
    }
    if base.regime != perturbed.regime || base.j != perturbed.j || base.law != perturbed.law {
        return Err(Error::Usage("perturbation_growth needs matching regime, flux and law".into()));
    }
    let mut sup = 0.0f64;
    let mut c1 = 0.0f64;
    for i in 0..base.len() {
        sup = sup.max((base.rho[i] - perturbed.rho[i]).abs());
        c1 = c1.max((base.derivative(i).0 - perturbed.derivative(i).0).abs());
    }
    Ok((sup, c1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rk::rk4_fixed;

    fn g2() -> PressureLaw {
        PressureLaw::GammaLaw { k: 1.0, gamma: 2.0 }
    }

    #[test]
    fn rhs_examples() {
        let iso = PressureLaw::Isothermal { k: 1.0 };
        assert_eq!(rhs(&iso, 1.0, 2.0, &FlowPoint::new(2.0, 0.0, 1.0)).unwrap(), (0.0, 0.0));
        let (a, b) = rhs(&iso, 1.0, 0.5, &FlowPoint::new(2.0, 1.0, 1.0)).unwrap();
        assert!((a - 8.0 / 3.0).abs() < 1e-15 && (b - 1.5).abs() < 1e-15);
        let (a, b) = rhs(&g2(), 1.0, 0.5, &FlowPoint::new(0.5, 1.0, 1.0)).unwrap();
        assert!((a + 1.0 / 6.0).abs() < 1e-15 && b.abs() < 1e-15);
        assert!(matches!(
            rhs(&g2(), 1.0, 0.5, &FlowPoint::new(2f64.powf(-1.0 / 3.0), 1.0, 1.0)),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn constant_state_is_preserved() {
        let iso = PressureLaw::Isothermal { k: 1.0 };
        let b = BackgroundCharge::constant(2.0, 1.0);
        let p = integrate(&iso, 1.0, &b, 0.0, 1.0, FlowPoint::new(2.0, 0.0, 1.0), &SteadyOptions::default()).unwrap();
        assert!(p.rho.iter().all(|&r| r == 2.0) && p.e.iter().all(|&e| e == 0.0));
        assert_eq!(p.regime, Regime::Subsonic);
    }

    #[test]
    fn supersonic_launch_matches_rk4_oracle() {
        let law = g2();
        let b = BackgroundCharge::constant(0.5, 1.0);
        let p = integrate(&law, 1.0, &b, 0.0, 0.3, FlowPoint::new(0.4, 0.2, 1.0), &SteadyOptions::default()).unwrap();
        assert_eq!(p.regime, Regime::Supersonic);
        // E > 0 and a negative denominator force ρ′ < 0 throughout.
        assert!(p.e.iter().all(|&e| e > 0.0));
        assert!(p.rho.windows(2).all(|w| w[1] < w[0]));
        let f = |_: f64, y: &[f64; 2]| Ok([y[0] * y[1] / (2.0 * y[0] - 1.0 / (y[0] * y[0])), y[0] - 0.5]);
        let mut sup = 0.0f64;
        for k in 1..=3 {
            let xk = 0.1 * k as f64;
            let y = rk4_fixed(f, 0.0, xk, [0.4, 0.2], 10_000 * k).unwrap();
            let s = p.state_at(xk).unwrap();
            sup = sup.max((s.rho - y[0]).abs()).max((s.e - y[1]).abs());
        }
        assert!(sup < 1e-8, "sup deviation {sup}");
        assert!(p.poisson_residual() < 1e-8);
    }

    #[test]
    fn sonic_breach_is_reported_with_position() {
        // Starting just subsonic with a field pushing density down reaches ρ_s.
        let law = g2();
        let b = BackgroundCharge::constant(0.5, 5.0);
        let err = integrate(&law, 1.0, &b, 0.0, 5.0, FlowPoint::new(0.85, -1.0, 1.0), &SteadyOptions::default())
            .unwrap_err();
        match err {
            Error::Singularity { x, .. } => assert!(x > 0.0 && x < 5.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampled_and_polynomial_charges() {
        let b = BackgroundCharge::new(ChargeProfile::Sampled { xs: vec![0.0, 0.5, 1.0], values: vec![0.2, 0.4, 0.3] }, 1.0)
            .unwrap();
        assert!((b.eval(0.25) - 0.3).abs() < 1e-15 && (b.eval(0.75) - 0.35).abs() < 1e-15);
        assert_eq!(b.range(), (0.2, 0.4));
        let p = BackgroundCharge::new(ChargeProfile::Polynomial(vec![1.0, 2.0, 3.0]), 1.0).unwrap();
        assert!((p.eval(2.0) - 17.0).abs() < 1e-15);
        let f = BackgroundCharge::new(
            ChargeProfile::Fourier { mean: 0.5, cos: vec![0.1], sin: vec![0.0], period: 1.0 },
            1.0,
        )
        .unwrap();
        assert!((f.eval(0.0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn perturbation_shapes_have_unit_sup_norm() {
        for s in PerturbationShape::ALL {
            let m = (0..=4000).map(|i| s.eval(i as f64 / 4000.0, 1.0).abs()).fold(0.0, f64::max);
            assert!((m - 1.0).abs() < 1e-6, "{s:?} {m}");
        }
    }
}
