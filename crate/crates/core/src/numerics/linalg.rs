//! Tridiagonal solves and small helpers on slices.

/// Solves a tridiagonal system by the Thomas algorithm. `sub[i]` couples row
/// `i` to unknown `i-1` (`sub[0]` unused), `sup[i]` couples row `i` to `i+1`
/// (`sup[n-1]` unused). The matrices assembled in this crate are diagonally
/// dominant, so no pivoting is performed.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = if n > 1 { sup[0] / beta } else { 0.0 };
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / beta;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Sup norm of a slice.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_against_dense() {
        let sub = [0.0, 1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let sup = [1.0, 0.3, 1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut rhs = [0.0; 4];
        for i in 0..4 {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += sub[i] * x_true[i - 1];
            }
            if i < 3 {
                rhs[i] += sup[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let (s, c, r2) = linear_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-15 && (c - 2.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }
}
