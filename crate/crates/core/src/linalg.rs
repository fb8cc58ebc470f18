//! Small dense / banded linear algebra: just enough to build the test
//! problems (normal equations, tridiagonal solves, extreme eigenvalues).
//! Everything here is deterministic; iterative routines start from a fixed
//! internal seed.

use crate::error::{Error, Result};
use crate::oracles::RngStream;
use crate::vector::Vector;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("matrix dimensions must be >= 1"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "matrix entry", index });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matvec(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::Dimension { expected: self.cols, got: x.len() });
        }
        let mut out = vec![0.0; self.rows];
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
        Vector::new(out)
    }

    pub fn t_matvec(&self, y: &Vector) -> Result<Vector> {
        if y.len() != self.rows {
            return Err(Error::Dimension { expected: self.rows, got: y.len() });
        }
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let yr = y[r];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
        Vector::new(out)
    }

    /// AᵀA, the (cols × cols) Gram matrix.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for r in 0..self.rows {
                    s += self.get(r, i) * self.get(r, j);
                }
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }
}

/// Lower-triangular Cholesky factor L with A = LLᵀ.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>, // row-major lower triangle, full storage
    /// max pivot / min pivot; a cheap condition-number proxy for A.
    pub cond_estimate: f64,
}

/// Cholesky of a symmetric positive-definite matrix. A pivot below
/// 1e-12 × (largest pivot) fails the factorization as rank-deficient.
pub fn cholesky(a: &DenseMatrix) -> Result<CholeskyFactor> {
    if a.rows() != a.cols() {
        return Err(Error::config(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    let mut max_pivot = f64::MIN;
    let mut min_pivot = f64::MAX;
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        max_pivot = max_pivot.max(d);
        min_pivot = min_pivot.min(d);
        // NaN pivots must also land in the rank-deficient branch.
        if d.is_nan() || d <= 1e-12 * max_pivot.max(f64::MIN_POSITIVE) {
            let cond = if d > 0.0 { max_pivot / d } else { f64::INFINITY };
            return Err(Error::RankDeficient { cond_estimate: cond });
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Ok(CholeskyFactor { n, l, cond_estimate: max_pivot / min_pivot })
}

impl CholeskyFactor {
    /// Solves LLᵀ x = b by forward then backward substitution.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        if b.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: b.len() });
        }
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for (lk, yk) in self.l[i * n..i * n + i].iter().zip(&y) {
                s -= lk * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for (xk, lrow) in x.iter().zip(self.l.chunks_exact(n)).skip(i + 1) {
                s -= lrow[i] * xk;
            }
            x[i] = s / self.l[i * n + i];
        }
        Vector::new(x)
    }
}

/// Solves a symmetric positive-definite system, one shot.
pub fn solve_spd(a: &DenseMatrix, b: &Vector) -> Result<Vector> {
    cholesky(a)?.solve(b)
}

/// Thomas algorithm for a tridiagonal system. `lower` and `upper` have
/// length n−1; no pivoting, so the matrix must be diagonally dominant or
/// positive definite (all our uses are).
pub fn tridiagonal_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::config("empty tridiagonal system"));
    }
    if lower.len() != n - 1 || upper.len() != n - 1 {
        return Err(Error::Dimension { expected: n - 1, got: lower.len().max(upper.len()) });
    }
    if rhs.len() != n {
        return Err(Error::Dimension { expected: n, got: rhs.len() });
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
    if diag[0].abs() <= tiny {
        return Err(Error::RankDeficient { cond_estimate: f64::INFINITY });
    }
    c[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom.abs() <= tiny {
            return Err(Error::RankDeficient { cond_estimate: f64::INFINITY });
        }
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

const EIG_SEED: u64 = 0x51_ab_e1;

fn eig_start(dim: usize) -> Vector {
    let mut rng = RngStream::new(EIG_SEED);
    let mut v = rng.normal_vector(dim);
    let norm = v.norm();
    v.scale(1.0 / norm);
    v
}

/// Largest eigenvalue (and eigenvector) of a symmetric operator given by
/// its matvec, via power iteration from a fixed random start. Converged
/// when ‖Av − λv‖ ≤ tol · max(1, |λ|).
pub fn power_iteration<F>(apply: F, dim: usize, tol: f64, max_iter: usize) -> Result<(f64, Vector)>
where
    F: Fn(&Vector) -> Vector,
{
    if dim == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    let mut v = eig_start(dim);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let av = apply(&v);
        lambda = v.dot(&av);
        let mut residual = av.clone();
        residual.add_scaled(-lambda, &v);
        if residual.norm() <= tol * lambda.abs().max(1.0) {
            return Ok((lambda, v));
        }
        let norm = av.norm();
        if norm == 0.0 {
            // v is in the kernel and A is PSD-zero on this start; eigenvalue 0
            return Ok((0.0, v));
        }
        v = av;
        v.scale(1.0 / norm);
    }
    Err(Error::Unavailable(format!(
        "power iteration stalled at residual tolerance {tol} (last estimate {lambda})"
    )))
}

/// Smallest eigenvalue of a symmetric positive-definite operator via
/// inverse power iteration; `solve` applies A⁻¹, `apply` applies A for the
/// residual check.
pub fn inverse_power_iteration<S, F>(
    solve: S,
    apply: F,
    dim: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vector)>
where
    S: Fn(&Vector) -> Result<Vector>,
    F: Fn(&Vector) -> Vector,
{
    if dim == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    let mut v = eig_start(dim);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let av = apply(&v);
        lambda = v.dot(&av);
        let mut residual = av;
        residual.add_scaled(-lambda, &v);
        if residual.norm() <= tol * lambda.abs().max(1.0) {
            return Ok((lambda, v));
        }
        let mut next = solve(&v)?;
        let norm = next.norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient { cond_estimate: f64::INFINITY });
        }
        next.scale(1.0 / norm);
        v = next;
    }
    Err(Error::Unavailable(format!(
        "inverse power iteration stalled at residual tolerance {tol} (last estimate {lambda})"
    )))
}
