//! Energy-consistent semi-discretization of the linearized subsonic problem
//! and its θ-method time stepper.
//!
//! With `w = 1/ρ̄₊`, `G = w (p′ − J²/ρ̄₊²)` and summation-by-parts quadrature
//! weights `H` (h in the interior, h/2 at both ends) the semi-discrete system is
//!
//! ```text
//! Y′ = V
//! w V′ = (F_{i+½} − F_{i−½})/H_i − 2J w (D(wV))_i − Y_i
//! ```
//!
//! with interior fluxes `F_{i+½} = G_{i+½}(Y_{i+1} − Y_i)/h`, boundary fluxes
//! `F(x₀) = 2J w₀² V₀ + w₀ Ē₀ Y₀`, `F(L) = 0`, and `D` the SBP first derivative.
//! It satisfies exactly `d/dt φ₀ₕ = −2J (w₀² V₀² + w_N² V_N²)`.

use crate::numerics::linalg::solve_tridiagonal;
use crate::subsonic::base::BaseTables;

/// Tridiagonal matrix in three-band storage.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self { sub: vec![0.0; n], diag: vec![0.0; n], sup: vec![0.0; n] }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }
}

/// Which parts of the operator are switched on. Everything is on for the
/// physical problem; the reduced variants exist for scheme-symmetry tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorTerms {
    pub zero_order: bool,
    pub boundary: bool,
}

impl Default for OperatorTerms {
    fn default() -> Self {
        Self { zero_order: true, boundary: true }
    }
}

/// The weighted semi-discrete operator `W V′ = A_Y Y + A_V V`.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub n_nodes: usize,
    pub h: f64,
    pub j: f64,
    /// `w = 1/ρ̄₊` at nodes.
    pub w: Vec<f64>,
    /// Quadrature weights.
    pub quad: Vec<f64>,
    /// `G` at half nodes.
    pub g_half: Vec<f64>,
    /// `w₀ Ē₊(x₀)`.
    pub boundary_weight: f64,
    pub ay: Tridiag,
    pub av: Tridiag,
    pub terms: OperatorTerms,
    pub d1: f64,
    pub e1: f64,
}

impl LinearOperator {
    pub fn new(base: &BaseTables, terms: OperatorTerms) -> Self {
        let n = base.n + 1;
        let h = base.h;
        let j = base.j;
        let w: Vec<f64> = base.rho.iter().map(|r| 1.0 / r).collect();
        let mut quad = vec![h; n];
        quad[0] = 0.5 * h;
        quad[n - 1] = 0.5 * h;
        let g_half: Vec<f64> = (0..base.n).map(|i| base.a_half(i) / base.rho_h[i]).collect();
        let mut ay = Tridiag::zeros(n);
        let mut av = Tridiag::zeros(n);
        for i in 0..n {
            if i + 1 < n {
                let c = g_half[i] / (h * quad[i]);
                ay.sup[i] += c;
                ay.diag[i] -= c;
            }
            if i > 0 {
                let c = g_half[i - 1] / (h * quad[i]);
                ay.sub[i] += c;
                ay.diag[i] -= c;
            }
            if terms.zero_order {
                ay.diag[i] -= 1.0;
            }
        }
        // Skew term −2J w D(w V) with the SBP first derivative.
        for i in 0..n {
            let s = -2.0 * j * w[i];
            if i == 0 {
                av.diag[0] += s * (-w[0] / h);
                av.sup[0] += s * (w[1] / h);
            } else if i == n - 1 {
                av.diag[i] += s * (w[i] / h);
                av.sub[i] += s * (-w[i - 1] / h);
            } else {
                av.sup[i] += s * (w[i + 1] / (2.0 * h));
                av.sub[i] += s * (-w[i - 1] / (2.0 * h));
            }
        }
        let boundary_weight = w[0] * base.e[0];
        if terms.boundary {
            ay.diag[0] -= boundary_weight / quad[0];
            av.diag[0] -= 2.0 * j * w[0] * w[0] / quad[0];
        }
        Self {
            n_nodes: n,
            h,
            j,
            w,
            quad,
            g_half,
            boundary_weight,
            ay,
            av,
            terms,
            d1: base.coefficients.d1_0,
            e1: base.coefficients.e1_0,
        }
    }

    /// `V′ = W⁻¹ (A_Y Y + A_V V)`.
    pub fn accel(&self, y: &[f64], v: &[f64]) -> Vec<f64> {
        let a = self.ay.apply(y);
        let b = self.av.apply(v);
        a.iter().zip(&b).zip(&self.w).map(|((p, q), w)| (p + q) / w).collect()
    }

    /// Discrete φ₀ with a chosen boundary weight.
    pub fn energy_with(&self, y: &[f64], v: &[f64], boundary_weight: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_nodes {
            s += self.quad[i] * (self.w[i] * v[i] * v[i] + y[i] * y[i]);
        }
        for i in 0..self.n_nodes - 1 {
            let d = (y[i + 1] - y[i]) / self.h;
            s += self.h * self.g_half[i] * d * d;
        }
        s + boundary_weight * y[0] * y[0]
    }

    /// Discrete φ₀.
    pub fn energy(&self, y: &[f64], v: &[f64]) -> f64 {
        self.energy_with(y, v, self.boundary_weight)
    }

    /// Instantaneous boundary dissipation `2J (w₀² V₀² + w_N² V_N²)`.
    pub fn dissipation_rate(&self, v: &[f64]) -> f64 {
        let n = self.n_nodes - 1;
        2.0 * self.j * (self.w[0] * self.w[0] * v[0] * v[0] + self.w[n] * self.w[n] * v[n] * v[n])
    }

    /// `Y_x(x₀)` implied by the boundary relation.
    pub fn boundary_slope(&self, y0: f64, v0: f64) -> f64 {
        self.d1 * v0 + self.e1 * y0
    }

    /// Smallest value of the Y-part of φ₀ (without the boundary term) over
    /// grid functions with `Y(x₀) = 1`. The exact φ₀ is coercive iff
    /// `w₀ Ē₊(x₀)` exceeds the negative of this trace constant.
    pub fn trace_constant(&self) -> f64 {
        let n = self.n_nodes;
        // Quadratic form Y·MY with M = diag(H) + stiffness.
        let mut sub = vec![0.0; n];
        let mut diag = self.quad.clone();
        let mut sup = vec![0.0; n];
        for i in 0..n - 1 {
            let g = self.g_half[i] / self.h;
            diag[i] += g;
            diag[i + 1] += g;
            sup[i] -= g;
            sub[i + 1] -= g;
        }
        let m = n - 1;
        let rhs: Vec<f64> = (1..n).map(|i| if i == 1 { -sub[1] } else { 0.0 }).collect();
        let rest = solve_tridiagonal(&sub[1..], &diag[1..], &sup[1..], &rhs);
        let mut y = vec![1.0; n];
        y[1..].copy_from_slice(&rest[..m]);
        let mut q = 0.0;
        for i in 0..n {
            let mut row = diag[i] * y[i];
            if i > 0 {
                row += sub[i] * y[i - 1];
            }
            if i + 1 < n {
                row += sup[i] * y[i + 1];
            }
            q += y[i] * row;
        }
        q
    }
}

/// θ-method for `U′ = A U + R(U)` with `θ = ½ + c_θ k`, the linear part
/// solved through one tridiagonal system per step after eliminating `Y`.
#[derive(Debug, Clone)]
pub struct ThetaStepper {
    pub op: LinearOperator,
    pub k: f64,
    pub theta: f64,
    lhs: Tridiag,
}

impl ThetaStepper {
    pub fn new(op: LinearOperator, k: f64, c_theta: f64) -> Self {
        let theta = 0.5 + c_theta * k.abs();
        let n = op.n_nodes;
        let mut lhs = Tridiag::zeros(n);
        let kt = k * theta;
        for i in 0..n {
            lhs.diag[i] = op.w[i] - kt * op.av.diag[i] - kt * kt * op.ay.diag[i];
            lhs.sub[i] = -kt * op.av.sub[i] - kt * kt * op.ay.sub[i];
            lhs.sup[i] = -kt * op.av.sup[i] - kt * kt * op.ay.sup[i];
        }
        Self { op, k, theta, lhs }
    }

    /// Advances `(y, v)` by one step. The optional sources are the already
    /// time-weighted increments `s_Y = k(θR_Y⁺ + (1−θ)R_Y)` and
    /// `s_V = k W (θR_V⁺ + (1−θ)R_V)`.
    pub fn step(&self, y: &[f64], v: &[f64], s_y: Option<&[f64]>, s_v: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let n = self.op.n_nodes;
        let k = self.k;
        let th = self.theta;
        // Y + k(1−θ)V + s_Y
        let mut ybar: Vec<f64> = (0..n).map(|i| y[i] + k * (1.0 - th) * v[i]).collect();
        if let Some(s) = s_y {
            for i in 0..n {
                ybar[i] += s[i];
            }
        }
        let ay_ybar = self.op.ay.apply(&ybar);
        let ay_y = self.op.ay.apply(y);
        let av_v = self.op.av.apply(v);
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| self.op.w[i] * v[i] + k * th * ay_ybar[i] + k * (1.0 - th) * (ay_y[i] + av_v[i]))
            .collect();
        if let Some(s) = s_v {
            for i in 0..n {
                rhs[i] += s[i];
            }
        }
        let vn = solve_tridiagonal(&self.lhs.sub, &self.lhs.diag, &self.lhs.sup, &rhs);
        let yn: Vec<f64> = (0..n).map(|i| ybar[i] + k * th * vn[i]).collect();
        (yn, vn)
    }
}
