//! Dominant eigenvalues of the discrete solution operator `S_T`.

use nalgebra::DMatrix;

use super::scheme::{LinearOperator, OperatorTerms, ThetaStepper};
use super::StepOptions;
use crate::error::{Error, Result};
use crate::subsonic::base::BaseTables;

/// Inner product used on the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XNorm {
    /// The energy form φ₀ itself, including the boundary term `w₀Ē₊(x₀)Y(x₀)²`.
    Exact,
    /// φ₀ with a negative boundary weight replaced by zero. Equivalent to
    /// `Exact` whenever the latter is coercive, and always positive.
    Shifted,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub step: StepOptions,
    pub max_iter: usize,
    /// Relative change of the modulus estimate that stops the power iteration.
    pub tol: f64,
    pub norm: XNorm,
    /// Krylov dimension for the Arnoldi variant.
    pub krylov_dim: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { step: StepOptions::default(), max_iter: 200, tol: 1e-9, norm: XNorm::Exact, krylov_dim: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub dominant_modulus: f64,
    pub iterations: usize,
    /// Residual of the two-dimensional Ritz projection of `S_T^block` on the
    /// last two iterates (power path), or the last subdiagonal entry (Arnoldi
    /// path).
    pub residual: f64,
    /// Modulus estimate of `S_T` after each power iteration.
    pub history: Vec<f64>,
    /// Ritz values `(re, im)` by decreasing modulus (Arnoldi path only).
    pub ritz: Vec<(f64, f64)>,
    pub boundary_weight: f64,
}

/// The map `h ↦ (Y(T), Y_t(T))` together with the chosen inner product.
pub struct SolutionOperator {
    stepper: ThetaStepper,
    steps: usize,
    /// Number of `S_T` applications per power-iteration sweep.
    pub block: usize,
    boundary_weight: f64,
}

impl SolutionOperator {
    pub fn new(base: &BaseTables, t: f64, step: &StepOptions, norm: XNorm) -> Result<Self> {
        let (steps, k) = step.resolve(base, t)?;
        let op = LinearOperator::new(base, OperatorTerms::default());
        let bw = op.boundary_weight;
        let boundary_weight = match norm {
            XNorm::Exact => {
                let trace = op.trace_constant();
                if bw <= -trace {
                    return Err(Error::NormDegenerate { boundary_weight: bw, trace_bound: -trace });
                }
                bw
            }
            XNorm::Shifted => bw.max(0.0),
        };
        // For short T the spectrum of S_T clusters near 1 and plain power
        // iteration stalls, so sweeps apply S_T often enough to cover a fixed
        // round-trip time. Eigenvalues of the block are μ^block.
        let block = ((base.round_trip_time() / t).ceil() as usize).max(1);
        Ok(Self { stepper: ThetaStepper::new(op, k, step.c_theta), steps, block, boundary_weight })
    }

    pub fn len(&self) -> usize {
        2 * self.stepper.op.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies `S_T` to a stacked vector `(Y, Y_t)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.stepper.op.n_nodes;
        let mut y = x[..n].to_vec();
        let mut v = x[n..].to_vec();
        for _ in 0..self.steps {
            let (a, b) = self.stepper.step(&y, &v, None, None);
            y = a;
            v = b;
        }
        y.extend_from_slice(&v);
        y
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let op = &self.stepper.op;
        let n = op.n_nodes;
        let (ay, av) = (&a[..n], &a[n..]);
        let (by, bv) = (&b[..n], &b[n..]);
        let mut s = 0.0;
        for i in 0..n {
            s += op.quad[i] * (op.w[i] * av[i] * bv[i] + ay[i] * by[i]);
        }
        for i in 0..n - 1 {
            s += op.g_half[i] * (ay[i + 1] - ay[i]) * (by[i + 1] - by[i]) / op.h;
        }
        s + self.boundary_weight * ay[0] * by[0]
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

/// Smooth deterministic start vector exciting many modes.
fn start_vector(base: &BaseTables) -> Vec<f64> {
    let ell = base.length - base.x0;
    let mut v: Vec<f64> = base
        .xs
        .iter()
        .map(|&x| {
            let s = (x - base.x0) / ell;
            (-((s - 0.3) / 0.1).powi(2)).exp() + 0.3 * (3.0 * s).cos()
        })
        .collect();
    let yt: Vec<f64> = base.xs.iter().map(|&x| 0.2 * (2.0 * (x - base.x0) / ell).sin()).collect();
    v.extend(yt);
    v
}

/// Power iteration (and, for `n_modes > 1`, an Arnoldi refinement) for the
/// dominant eigenvalue modulus of `S_T`.
pub fn solution_operator_spectrum(base: &BaseTables, t: f64, n_modes: usize, opts: &SpectrumOptions) -> Result<SpectrumReport> {
    let s_op = SolutionOperator::new(base, t, &opts.step, opts.norm)?;
    let mut h = start_vector(base);
    let nh = s_op.norm(&h);
    h.iter_mut().for_each(|x| *x /= nh);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut estimate = f64::NAN;
    let sweep = |x: &[f64]| {
        let mut g = x.to_vec();
        for _ in 0..s_op.block {
            g = s_op.apply(&g);
        }
        g
    };
    let inv_block = 1.0 / s_op.block as f64;
    let mut g = sweep(&h);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut residual = f64::NAN;
    for it in 1..=opts.max_iter {
        iterations = it;
        let r = s_op.norm(&g);
        // A Ritz pair on the last two iterates resolves a complex-conjugate
        // dominant pair, whose norm ratios alone oscillate.
        let (mu, res) = match &prev {
            Some((p, pg)) => ritz2(&s_op, p, pg, &h, &g),
            None => {
                let q = s_op.inner(&g, &h);
                let resid: Vec<f64> = g.iter().zip(&h).map(|(a, b)| a - q * b).collect();
                (q.abs(), s_op.norm(&resid))
            }
        };
        let est = mu.powf(inv_block);
        history.push(est);
        let converged = it > 2 && (est - estimate).abs() <= opts.tol * est;
        estimate = est;
        residual = res;
        if r == 0.0 || converged {
            break;
        }
        let next: Vec<f64> = g.iter().map(|x| x / r).collect();
        let next_img = sweep(&next);
        prev = Some((std::mem::replace(&mut h, next), std::mem::replace(&mut g, next_img)));
    }
    let mut report = SpectrumReport {
        dominant_modulus: estimate,
        iterations,
        residual,
        history,
        ritz: Vec::new(),
        boundary_weight: s_op.boundary_weight,
    };
    if n_modes > 1 {
        let (ritz, sub) = arnoldi(&s_op, &h, opts.krylov_dim.max(2 * n_modes + 2));
        if let Some(&(re, im)) = ritz.first() {
            report.dominant_modulus = (re * re + im * im).sqrt();
        }
        report.residual = sub;
        report.ritz = ritz.into_iter().take(n_modes).collect();
    }
    Ok(report)
}

/// Largest Ritz-value modulus of the block map on `span{p, h}` given the
/// images `pg = S p` and `g = S h`, and the Ritz residual norm. Falls back to
/// the Rayleigh quotient of `h` when the two vectors are parallel.
fn ritz2(s_op: &SolutionOperator, p: &[f64], pg: &[f64], h: &[f64], g: &[f64]) -> (f64, f64) {
    let nh = s_op.norm(h);
    let q1: Vec<f64> = h.iter().map(|x| x / nh).collect();
    let sq1: Vec<f64> = g.iter().map(|x| x / nh).collect();
    let c = s_op.inner(p, &q1);
    let mut q2: Vec<f64> = p.iter().zip(&q1).map(|(a, b)| a - c * b).collect();
    let mut sq2: Vec<f64> = pg.iter().zip(&sq1).map(|(a, b)| a - c * b).collect();
    let n2 = s_op.norm(&q2);
    if n2 <= 1e-6 * s_op.norm(p) {
        let mu = s_op.inner(&sq1, &q1);
        let resid: Vec<f64> = sq1.iter().zip(&q1).map(|(a, b)| a - mu * b).collect();
        return (mu.abs(), s_op.norm(&resid));
    }
    q2.iter_mut().for_each(|x| *x /= n2);
    sq2.iter_mut().for_each(|x| *x /= n2);
    let (h11, h12) = (s_op.inner(&sq1, &q1), s_op.inner(&sq2, &q1));
    let (h21, h22) = (s_op.inner(&sq1, &q2), s_op.inner(&sq2, &q2));
    let tr = 0.5 * (h11 + h22);
    let det = h11 * h22 - h12 * h21;
    let disc = tr * tr - det;
    let mu = if disc < 0.0 { det.sqrt() } else { tr.abs() + disc.sqrt() };
    // Residual of the projected operator: ‖S Q − Q H‖ over both columns.
    let r1: Vec<f64> = (0..q1.len()).map(|i| sq1[i] - h11 * q1[i] - h21 * q2[i]).collect();
    let r2: Vec<f64> = (0..q1.len()).map(|i| sq2[i] - h12 * q1[i] - h22 * q2[i]).collect();
    (mu, s_op.norm(&r1).hypot(s_op.norm(&r2)))
}

/// Arnoldi with the X inner product; returns Ritz values sorted by modulus
/// and the last subdiagonal entry of the Hessenberg matrix.
fn arnoldi(s_op: &SolutionOperator, start: &[f64], m: usize) -> (Vec<(f64, f64)>, f64) {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let n0 = s_op.norm(start);
    basis.push(start.iter().map(|x| x / n0).collect());
    let mut hess = DMatrix::<f64>::zeros(m, m);
    let mut dim = m;
    let mut last_sub = 0.0;
    for k in 0..m {
        let mut w = s_op.apply(&basis[k]);
        // Classical Gram–Schmidt applied twice.
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = s_op.inner(&w, q);
                hess[(i, k)] += c;
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nw = s_op.norm(&w);
        last_sub = nw;
        if k + 1 < m {
            if nw < 1e-300 {
                dim = k + 1;
                break;
            }
            hess[(k + 1, k)] = nw;
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    let h = hess.view((0, 0), (dim, dim)).into_owned();
    let mut ritz: Vec<(f64, f64)> = h.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    ritz.sort_by(|a, b| (b.0.hypot(b.1)).partial_cmp(&a.0.hypot(a.1)).unwrap_or(std::cmp::Ordering::Equal));
    (ritz, last_sub)
}
