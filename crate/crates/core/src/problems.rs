//! The benchmark objectives: Nesterov's worst-case quadratics (degenerate
//! and strongly convex), plain diagonal quadratics, and linear least
//! squares. Constructors report certified constants — smoothness from power
//! iteration on the actual Hessian, minimizers from direct solves with
//! residual checks — rather than trusting closed forms silently.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::SmoothProblem;
use crate::vector::Vector;

const EIG_TOL: f64 = 1e-10;
const EIG_MAX_ITER: usize = 2_000_000;

/// Nesterov's degenerate worst-case quadratic on ℝⁿ with an active chain of
/// length k ≤ n:
///
///   f(x) = (L/8)(x₁² + Σ_{j<k}(x_j − x_{j+1})² + x_k²) − (L/4)x₁.
///
/// The Hessian is (L/4)·B with B the k×k second-difference block padded by
/// zeros, so the reported strong convexity is 0 (B is singular on ℝⁿ for
/// k < n, and its smallest block eigenvalue decays like 1/k² anyway). The
/// minimizer is x*_j = 1 − j/(k+1) on the chain, 0 beyond.
pub fn nesterov_degenerate(n: usize, k: usize, l: f64) -> Result<SmoothProblem> {
    if n == 0 {
        return Err(Error::config("dimension must be >= 1"));
    }
    if k == 0 || k > n {
        return Err(Error::config(format!("chain length k must satisfy 1 <= k <= n, got k={k}, n={n}")));
    }
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::config(format!("scale L must be positive, got {l}")));
    }
    let quarter = l / 4.0;
    let eighth = l / 8.0;
    let eval = move |x: &Vector| {
        let mut quad = x[0] * x[0] + x[k - 1] * x[k - 1];
        for j in 0..k.saturating_sub(1) {
            let d = x[j] - x[j + 1];
            quad += d * d;
        }
        let value = eighth * quad - quarter * x[0];
        let grad = Vector::from_fn(x.len(), |j| {
            if j >= k {
                return 0.0;
            }
            let mut b = 2.0 * x[j];
            if j > 0 {
                b -= x[j - 1];
            }
            if j + 1 < k {
                b -= x[j + 1];
            }
            quarter * (b - if j == 0 { 1.0 } else { 0.0 })
        });
        (value, grad)
    };

    // smoothness from the k×k block; cross-checked against the closed-form
    // spectrum in tests
    let apply_block = |v: &Vector| {
        Vector::from_fn(k, |j| {
            let mut s = 2.0 * v[j];
            if j > 0 {
                s -= v[j - 1];
            }
            if j + 1 < k {
                s -= v[j + 1];
            }
            quarter * s
        })
    };
    let (l_f, _) = linalg::power_iteration(apply_block, k, EIG_TOL, EIG_MAX_ITER)?;

    // 1 − j/(k+1) written as a single division so small integer cases come
    // out exactly representable
    let x_star = Vector::from_fn(n, |j| {
        if j < k {
            (k - j) as f64 / (k as f64 + 1.0)
        } else {
            0.0
        }
    });
    let f_star = eval(&x_star).0;

    SmoothProblem::new(
        format!("nesterov-degenerate(n={n},k={k},L={l})"),
        n,
        l_f,
        0.0,
        Arc::new(eval),
    )?
    .with_optimum(x_star, f_star)
}

/// Nesterov's strongly convex quadratic on ℝⁿ:
///
///   f(x) = ½ xᵀHx − c x₁,   H = c·A + μI,   c = μ(χ−1)/4,
///
/// with A the full n×n second-difference matrix. χ is a target condition
/// number; the achieved one is slightly better because λ_max(A) < 4. Both
/// extreme eigenvalues of H are measured by (inverse) power iteration and
/// reported as the problem constants.
pub fn nesterov_strongly_convex(n: usize, mu: f64, chi: f64) -> Result<SmoothProblem> {
    if n < 2 {
        return Err(Error::config(format!("dimension must be >= 2, got {n}")));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::config(format!("strong convexity must be positive, got {mu}")));
    }
    if !chi.is_finite() || chi <= 1.0 {
        return Err(Error::config(format!("condition target chi must exceed 1, got {chi}")));
    }
    let c = mu * (chi - 1.0) / 4.0;
    let apply_h = move |v: &Vector| {
        Vector::from_fn(v.len(), |j| {
            let mut a = 2.0 * v[j];
            if j > 0 {
                a -= v[j - 1];
            }
            if j + 1 < v.len() {
                a -= v[j + 1];
            }
            c * a + mu * v[j]
        })
    };
    let eval = move |x: &Vector| {
        let hx = apply_h(x);
        let value = 0.5 * x.dot(&hx) - c * x[0];
        let grad = Vector::from_fn(x.len(), |j| hx[j] - if j == 0 { c } else { 0.0 });
        (value, grad)
    };

    let (l_f, _) = linalg::power_iteration(apply_h, n, EIG_TOL, EIG_MAX_ITER)?;
    let lower = vec![-c; n - 1];
    let diag = vec![2.0 * c + mu; n];
    let upper = vec![-c; n - 1];
    let solve_h = |v: &Vector| tridiagonal_solve_vec(&lower, &diag, &upper, v);
    let (mu_measured, _) = linalg::inverse_power_iteration(solve_h, apply_h, n, EIG_TOL, EIG_MAX_ITER)?;

    // minimizer solves Hx = c e₁; insist on a tight residual before
    // trusting it
    let mut rhs = Vector::zeros(n);
    rhs[0] = c;
    let x_star = solve_h(&rhs)?;
    let mut residual = apply_h(&x_star);
    residual.add_scaled(-1.0, &rhs);
    if residual.norm() > 1e-10 * rhs.norm().max(1.0) {
        return Err(Error::Unavailable(format!(
            "minimizer solve residual {:.3e} too large",
            residual.norm()
        )));
    }
    let f_star = eval(&x_star).0;

    SmoothProblem::new(
        format!("nesterov-strongly-convex(n={n},mu={mu},chi={chi})"),
        n,
        l_f,
        mu_measured,
        Arc::new(eval),
    )?
    .with_optimum(x_star, f_star)
}

fn tridiagonal_solve_vec(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &Vector) -> Result<Vector> {
    linalg::tridiagonal_solve(lower, diag, upper, rhs.as_slice()).and_then(Vector::new)
}

/// f(x) = ½ Σ λᵢ xᵢ² for eigenvalues given in nondecreasing order (so the
/// constants read off the ends: μ = λ₁, L_f = λₙ). The minimizer is the
/// origin with value 0.
pub fn diagonal_quadratic(lambdas: &[f64]) -> Result<SmoothProblem> {
    if lambdas.is_empty() {
        return Err(Error::config("need at least one eigenvalue"));
    }
    for (i, l) in lambdas.iter().enumerate() {
        if !l.is_finite() || *l < 0.0 {
            return Err(Error::config(format!("eigenvalue {i} must be finite and >= 0, got {l}")));
        }
        if i > 0 && lambdas[i - 1] > *l {
            return Err(Error::config(format!(
                "eigenvalues must be nondecreasing; entry {i} ({l}) is below its predecessor ({})",
                lambdas[i - 1]
            )));
        }
    }
    let n = lambdas.len();
    let l_f = lambdas[n - 1];
    let mu = lambdas[0];
    let owned = lambdas.to_vec();
    let eval = move |x: &Vector| {
        let value = 0.5 * x.iter().zip(&owned).map(|(xi, li)| li * xi * xi).sum::<f64>();
        let grad = Vector::from_fn(x.len(), |i| owned[i] * x[i]);
        (value, grad)
    };
    SmoothProblem::new(format!("diagonal-quadratic(n={n})"), n, l_f, mu, Arc::new(eval))?
        .with_optimum(Vector::zeros(n), 0.0)
}

/// Linear least squares f(x) = ½‖Ax − b‖² (note the ½: then ∇f = Aᵀ(Ax−b)
/// and the Hessian is exactly AᵀA). Constants are the extreme eigenvalues
/// of the Gram matrix; the minimizer solves the normal equations. A rank-
/// deficient A fails construction with a condition estimate.
pub fn least_squares(a: DenseMatrix, b: Vector) -> Result<SmoothProblem> {
    if b.len() != a.rows() {
        return Err(Error::Dimension { expected: a.rows(), got: b.len() });
    }
    let n = a.cols();
    let gram = a.gram();
    let factor = linalg::cholesky(&gram)?;
    let atb = a.t_matvec(&b)?;
    let x_star = factor.solve(&atb)?;

    let gram_apply = {
        let gram = gram.clone();
        move |v: &Vector| gram.matvec(v).expect("gram matvec dimension")
    };
    let (l_f, _) = linalg::power_iteration(&gram_apply, n, EIG_TOL, EIG_MAX_ITER)?;
    let (mu, _) = linalg::inverse_power_iteration(|v| factor.solve(v), &gram_apply, n, EIG_TOL, EIG_MAX_ITER)?;

    let rows = a.rows();
    let eval = move |x: &Vector| {
        let ax = a.matvec(x).expect("matvec dimension");
        let mut value = 0.0;
        let mut residual = Vector::zeros(rows);
        for r in 0..rows {
            let d = ax[r] - b[r];
            residual[r] = d;
            value += 0.5 * d * d;
        }
        let grad = a.t_matvec(&residual).expect("t_matvec dimension");
        (value, grad)
    };
    let f_star = eval(&x_star).0;

    SmoothProblem::new(format!("least-squares({rows}x{n})"), n, l_f, mu, Arc::new(eval))?
        .with_optimum(x_star, f_star)
}
