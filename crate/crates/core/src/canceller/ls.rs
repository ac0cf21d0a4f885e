use num_complex::Complex64;

use crate::error::{PimError, Result};

/// `g = argmin ‖rx − A g‖² + λ‖g‖²` over `rows`, with `A` given by columns.
/// Returns `g` and the residual over the full column length.
///
/// Solved through the normal equations with a complex Cholesky factorization
/// and one step of iterative refinement. With `λ = 0`, a pivot below
/// `1e-12 · max diag` is reported as rank deficiency.
pub fn ls_fit(
    cols: &[Vec<Complex64>],
    rx: &[Complex64],
    rows: std::ops::Range<usize>,
    ridge: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let g = ls_solve(cols, rx, rows, ridge)?;
    let res = residual(cols, rx, &g);
    Ok((g, res))
}

pub fn residual(cols: &[Vec<Complex64>], rx: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let mut r = rx.to_vec();
    for (c, &gi) in cols.iter().zip(g) {
        for (rv, cv) in r.iter_mut().zip(c) {
            *rv -= gi * cv;
        }
    }
    r
}

pub fn ls_solve(cols: &[Vec<Complex64>], rx: &[Complex64], rows: std::ops::Range<usize>, ridge: f64) -> Result<Vec<Complex64>> {
    let n = cols.len();
    if n == 0 {
        return Err(PimError::config("canceller.basis", "empty term set"));
    }
    if rows.end > rx.len() || cols.iter().any(|c| c.len() < rows.end) {
        return Err(PimError::dim("fit rows exceed the signal length"));
    }
    if rows.len() < n {
        return Err(PimError::dim(format!("{} rows for {n} unknowns", rows.len())));
    }
    if !(ridge >= 0.0) {
        return Err(PimError::config("canceller.ridge", "must be non-negative"));
    }
    let gram = gram(cols, rows.clone());
    let trace: f64 = (0..n).map(|i| gram[i * n + i].re).sum();
    let lambda = ridge * trace / n as f64;
    let mut a = gram.clone();
    for i in 0..n {
        a[i * n + i] += lambda;
    }
    let rhs: Vec<Complex64> = cols.iter().map(|c| dot(&c[rows.clone()], &rx[rows.clone()])).collect();
    let l = cholesky(&a, n)?;
    let mut g = chol_solve(&l, n, &rhs);
    // One refinement pass against the regularized system.
    let mut r = rhs.clone();
    for i in 0..n {
        for j in 0..n {
            r[i] -= a[i * n + j] * g[j];
        }
    }
    let d = chol_solve(&l, n, &r);
    for (gi, di) in g.iter_mut().zip(d) {
        *gi += di;
    }
    Ok(g)
}

/// `Σ conj(a) · b`.
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Row-major `AᴴA` restricted to `rows`.
fn gram(cols: &[Vec<Complex64>], rows: std::ops::Range<usize>) -> Vec<Complex64> {
    let n = cols.len();
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let v = dot(&cols[i][rows.clone()], &cols[j][rows.clone()]);
            g[i * n + j] = v;
            g[j * n + i] = v.conj();
        }
    }
    g
}

fn cholesky(a: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let max_diag = (0..n).map(|i| a[i * n + i].re).fold(0.0, f64::max);
    let tol = 1e-12 * max_diag;
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > tol) {
            return Err(PimError::RankDeficient { pivot: j, size: n });
        }
        let djj = d.sqrt();
        l[j * n + j] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

fn chol_solve(l: &[Complex64], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    y
}
