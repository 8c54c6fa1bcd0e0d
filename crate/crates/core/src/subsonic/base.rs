//! Frozen base state behind the shock: grid tables of the linearized
//! coefficients and dense profile tables used when the shock moves.

use crate::eos::{FlowPoint, PressureLaw};
use crate::error::{Error, Result};
use crate::numerics::hermite;
use crate::shock_fitter::TransonicSolution;
use crate::steady::{integrate_on_grid, uniform_grid, BackgroundCharge, SteadyOptions, SteadyProfile};

/// Steady profile sampled on a fine uniform grid with slopes from the
/// right-hand side, evaluated by cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub x_lo: f64,
    pub dx: f64,
    /// Index of the node where the integration started.
    pub anchor: usize,
    pub rho: Vec<f64>,
    pub e: Vec<f64>,
    pub drho: Vec<f64>,
    pub de: Vec<f64>,
}

/// Interpolated steady state and its slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableState {
    pub rho: f64,
    pub e: f64,
    pub drho: f64,
    pub de: f64,
}

impl ProfileTable {
    /// Integrates from `(x_start, state)` to both ends of `[lo, hi]` on a grid
    /// of spacing `dx` that contains `x_start`.
    pub fn build(
        law: &PressureLaw,
        j: f64,
        b: &BackgroundCharge,
        lo: f64,
        hi: f64,
        x_start: f64,
        state: [f64; 2],
        dx: f64,
        opts: &SteadyOptions,
    ) -> Result<Self> {
        // The table may overhang [lo, hi] by less than one step.
        let step = dx;
        let n_left = ((x_start - lo) / step - 1e-9).ceil().max(0.0) as usize;
        let n_right = ((hi - x_start) / step - 1e-9).ceil().max(1.0) as usize;
        let x_lo = x_start - n_left as f64 * step;
        let mut rho = Vec::with_capacity(n_left + n_right + 1);
        let mut e = Vec::with_capacity(n_left + n_right + 1);
        if n_left > 0 {
            let grid: Vec<f64> = (0..=n_left).map(|i| x_start - i as f64 * step).collect();
            let back = integrate_on_grid(law, j, b, &grid, state, opts)?;
            for s in back.iter().skip(1).rev() {
                rho.push(s[0]);
                e.push(s[1]);
            }
        }
        let grid: Vec<f64> = (0..=n_right).map(|i| x_start + i as f64 * step).collect();
        let fwd = integrate_on_grid(law, j, b, &grid, state, opts)?;
        for s in &fwd {
            rho.push(s[0]);
            e.push(s[1]);
        }
        let mut drho = Vec::with_capacity(rho.len());
        let mut de = Vec::with_capacity(rho.len());
        for i in 0..rho.len() {
            let x = x_lo + i as f64 * step;
            drho.push(rho[i] * e[i] / law.sonic_gap(rho[i], j));
            de.push(rho[i] - b.eval(x));
        }
        Ok(Self { x_lo, dx: step, anchor: n_left, rho, e, drho, de })
    }

    pub fn x_hi(&self) -> f64 {
        self.x_lo + (self.rho.len() - 1) as f64 * self.dx
    }

    /// `(ρ(x_a + δ) − ρ(x_a), E(x_a + δ) − E(x_a))` for the anchor node
    /// `x_a`, accurate relative to the increment itself when `x_a + δ` lies in
    /// a cell next to the anchor.
    pub fn increment(&self, offset: f64) -> Result<(f64, f64)> {
        let a = self.anchor;
        let xa = self.x_lo + a as f64 * self.dx;
        let t = offset / self.dx;
        // Hermite cubic on [x_i, x_i + dx] in factored form, with t and
        // s = 1 − t passed separately so the small one is exact.
        let near = |i: usize, v: &[f64], d: &[f64], t: f64, s: f64| {
            let dy = v[i + 1] - v[i];
            if i == a {
                dy * t * t * (3.0 - 2.0 * t) + self.dx * (d[i] * t * s * s - d[i + 1] * t * t * s)
            } else {
                -dy * s * s * (3.0 - 2.0 * s) + self.dx * (d[i] * t * s * s - d[i + 1] * t * t * s)
            }
        };
        if (0.0..=1.0).contains(&t) && a + 1 < self.rho.len() {
            let s = 1.0 - t;
            return Ok((near(a, &self.rho, &self.drho, t, s), near(a, &self.e, &self.de, t, s)));
        }
        if (-1.0..0.0).contains(&t) && a > 0 {
            let s = -t;
            let t = 1.0 + t;
            return Ok((near(a - 1, &self.rho, &self.drho, t, s), near(a - 1, &self.e, &self.de, t, s)));
        }
        let st = self.eval(xa + offset)?;
        Ok((st.rho - self.rho[a], st.e - self.e[a]))
    }

    pub fn eval(&self, x: f64) -> Result<TableState> {
        let n = self.rho.len();
        let t = (x - self.x_lo) / self.dx;
        if !(t >= -1e-9 && t <= (n - 1) as f64 + 1e-9) {
            return Err(Error::StateInvalid(format!("x = {x} outside profile table [{}, {}]", self.x_lo, self.x_hi())));
        }
        let i = (t.floor() as isize).clamp(0, n as isize - 2) as usize;
        let x0 = self.x_lo + i as f64 * self.dx;
        let x1 = x0 + self.dx;
        let (rho, drho) = hermite(x0, x1, self.rho[i], self.rho[i + 1], self.drho[i], self.drho[i + 1], x);
        let (e, de) = hermite(x0, x1, self.e[i], self.e[i + 1], self.de[i], self.de[i + 1], x);
        Ok(TableState { rho, e, drho, de })
    }
}

/// Partial derivatives of the shock-response maps at the base shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockResponseCoefficients {
    pub d_a1_drho: f64,
    pub d_a1_dshift: f64,
    pub d_a2_drho: f64,
    pub d_a2_dshift: f64,
    pub d_a3_dy: f64,
    pub d_a4_dyx: f64,
    pub d_a4_dy: f64,
    pub d1_0: f64,
    pub e1_0: f64,
}

/// Base coefficients on the uniform grid `x_i = x₀ + i h`, `i = 0..=n`, and
/// at the half nodes `x₀ + (i + ½) h`.
#[derive(Debug, Clone)]
pub struct BaseTables {
    pub law: PressureLaw,
    pub j: f64,
    pub x0: f64,
    pub length: f64,
    pub n: usize,
    pub h: f64,
    pub xs: Vec<f64>,
    /// `ρ̄₊`, also the zero-order coefficient `g`.
    pub rho: Vec<f64>,
    pub e: Vec<f64>,
    pub u: Vec<f64>,
    /// `a₀₁ = a₁₀ = ū₊`.
    pub a01: Vec<f64>,
    /// `a₁₁ = −(p′(ρ̄₊) − J²/ρ̄₊²)`.
    pub a11: Vec<f64>,
    /// `b₀ = ∂ₓ(2J/ρ̄₊)`.
    pub b0: Vec<f64>,
    /// `b₁ = −∂ₓ(p′(ρ̄₊) − J²/ρ̄₊²) + Ē₊`.
    pub b1: Vec<f64>,
    pub drho: Vec<f64>,
    pub xh: Vec<f64>,
    pub rho_h: Vec<f64>,
    pub e_h: Vec<f64>,
    /// Upstream (supersonic) state at the shock.
    pub rho_minus: f64,
    pub e_minus: f64,
    pub coefficients: ShockResponseCoefficients,
    /// Subsonic profile extended a little upstream of `x₀`.
    pub plus_table: ProfileTable,
    /// Supersonic profile extended a little downstream of `x₀`.
    pub minus_table: ProfileTable,
    /// The fine subsonic profile from the steady solution.
    pub profile: SteadyProfile,
}

impl BaseTables {
    pub fn a(&self, i: usize) -> f64 {
        -self.a11[i]
    }

    /// `p′ − J²/ρ²` at half node `i + ½`.
    pub fn a_half(&self, i: usize) -> f64 {
        self.law.sonic_gap(self.rho_h[i], self.j)
    }

    /// Largest characteristic speed `max(ū + c)` on the grid.
    pub fn max_wave_speed(&self) -> f64 {
        (0..=self.n).map(|i| self.a01[i] + (self.a01[i] * self.a01[i] - self.a11[i]).sqrt()).fold(0.0, f64::max)
    }

    /// Time for a signal to cross the subsonic region and return:
    /// `∫ dx/(c − ū) + ∫ dx/(c + ū)`.
    pub fn round_trip_time(&self) -> f64 {
        let f = |rho: f64| {
            let c = self.law.sound_speed(rho);
            let u = self.j / rho;
            1.0 / (c - u) + 1.0 / (c + u)
        };
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.h / 6.0 * (f(self.rho[i]) + 4.0 * f(self.rho_h[i]) + f(self.rho[i + 1]));
        }
        s
    }

    pub fn upstream(&self) -> FlowPoint {
        FlowPoint::new(self.rho_minus, self.e_minus, self.j)
    }
}

/// Tabulates the base coefficients of the linearized subsonic problem on a
/// grid of `n` intervals over `[x₀, L]`.
pub fn build_base(solution: &TransonicSolution, n: usize) -> Result<BaseTables> {
    if n < 64 {
        return Err(Error::Usage(format!("grid needs at least 64 intervals, got {n}")));
    }
    let law = solution.law;
    let j = solution.j;
    let x0 = solution.x0;
    let length = solution.length;
    let profile = solution.right.clone();
    let b = profile.b.clone();
    let opts = SteadyOptions { tol: profile.opts.tol.min(1e-12), ..profile.opts };
    let h = (length - x0) / n as f64;
    let fine = uniform_grid(x0, length, 2 * n);
    let down = solution.downstream();
    let states = integrate_on_grid(&law, j, &b, &fine, [down.rho, down.e], &opts)?;
    let xs: Vec<f64> = (0..=n).map(|i| fine[2 * i]).collect();
    let xh: Vec<f64> = (0..n).map(|i| fine[2 * i + 1]).collect();
    let rho: Vec<f64> = (0..=n).map(|i| states[2 * i][0]).collect();
    let e: Vec<f64> = (0..=n).map(|i| states[2 * i][1]).collect();
    let rho_h: Vec<f64> = (0..n).map(|i| states[2 * i + 1][0]).collect();
    let e_h: Vec<f64> = (0..n).map(|i| states[2 * i + 1][1]).collect();
    let mut u = Vec::with_capacity(n + 1);
    let mut a11 = Vec::with_capacity(n + 1);
    let mut b0 = Vec::with_capacity(n + 1);
    let mut b1 = Vec::with_capacity(n + 1);
    let mut drho = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let r = rho[i];
        let gap = law.sonic_gap(r, j);
        if !(gap > 0.0) {
            return Err(Error::StateInvalid(format!("base state is not subsonic at x = {}", xs[i])));
        }
        let rx = r * e[i] / gap;
        u.push(j / r);
        a11.push(-gap);
        b0.push(-2.0 * j * rx / (r * r));
        b1.push(-law.sonic_gap_derivative(r, j) * rx + e[i]);
        drho.push(rx);
    }
    let up = solution.upstream();
    let span = length - x0;
    let delta = (0.1 * span).min(0.5 * x0);
    let table_dx = h / 8.0;
    let plus_table = ProfileTable::build(&law, j, &b, x0 - delta, length, x0, [down.rho, down.e], table_dx, &opts)?;
    let minus_table = ProfileTable::build(&law, j, &b, x0 - delta, x0 + delta, x0, [up.rho, up.e], table_dx, &opts)?;
    let coefficients = shock_response(&law, j, up.rho, down.rho, down.e);
    Ok(BaseTables {
        law,
        j,
        x0,
        length,
        n,
        h,
        a01: u.clone(),
        u,
        a11,
        b0,
        b1,
        drho,
        e,
        rho,
        xs,
        xh,
        rho_h,
        e_h,
        rho_minus: up.rho,
        e_minus: up.e,
        coefficients,
        plus_table,
        minus_table,
        profile,
    })
}

/// Shock-response partials from the states on both sides of the shock.
pub fn shock_response(law: &PressureLaw, j: f64, rho_minus: f64, rho_plus: f64, e: f64) -> ShockResponseCoefficients {
    let u = j / rho_plus;
    let a = law.sonic_gap(rho_plus, j);
    let jump = rho_plus - rho_minus;
    ShockResponseCoefficients {
        d_a1_drho: -a / (2.0 * u),
        d_a1_dshift: -jump * e / (2.0 * u),
        d_a2_drho: -a / (2.0 * u * jump),
        d_a2_dshift: -e / (2.0 * u),
        d_a3_dy: 1.0 / (rho_minus - rho_plus),
        d_a4_dyx: a / (2.0 * u),
        d_a4_dy: -e / (2.0 * u),
        d1_0: 2.0 * u / a,
        e1_0: e / a,
    }
}
