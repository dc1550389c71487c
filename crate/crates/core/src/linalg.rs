//! Shared dense linear-algebra helpers: seeded start vectors, power iteration
//! and a Cholesky wrapper that refuses numerically singular systems.

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Seed used for power-iteration start vectors when the caller has none.
pub const POWER_ITERATION_SEED: u64 = 0x5eed_0f_1a7;

/// Pivot-ratio condition estimate above which a factorization is rejected.
pub const MAX_CONDITION: f64 = 1e13;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    // fill row by row so the draw order matches the row-major interface
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// Stops once the Rayleigh quotient moves by less than `1e-2 * tol` relative,
/// which keeps the true error near `tol` even for slowly separating spectra.
/// `start` warm-starts the iteration; otherwise a seeded Gaussian is used.
pub fn power_iteration<F>(op: F, n: usize, tol: f64, start: Option<&Vector>) -> (f64, Vector)
where
    F: Fn(&Vector) -> Vector,
{
    let mut v = match start {
        Some(s) if s.len() == n && s.norm() > 0.0 => s.normalize(),
        _ => {
            let mut rng = seeded_rng(POWER_ITERATION_SEED);
            gaussian_vector(&mut rng, n).normalize()
        }
    };
    if n == 0 {
        return (0.0, v);
    }
    let mut estimate = 0.0;
    let max_iter = 100_000;
    for it in 0..max_iter {
        let w = op(&v);
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return (0.0, v);
        }
        v = w / wn;
        if it > 2 && (next - estimate).abs() <= 1e-2 * tol * next.abs() {
            return (next.max(0.0), v);
        }
        estimate = next;
    }
    (estimate.max(0.0), v)
}

/// Largest singular value of `a` to relative accuracy `tol`.
pub fn spectral_norm_estimate(a: &Matrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    if a.nrows() == 0 || a.ncols() == 0 || a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    // relative error of the square root is half that of the eigenvalue
    let (sigma_sq, _) = power_iteration(|v| a.tr_mul(&(a * v)), a.ncols(), tol, None);
    Ok(sigma_sq.sqrt())
}

/// Cholesky factorization that also rejects badly conditioned PD matrices.
pub fn checked_cholesky(h: Matrix, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let chol = Cholesky::new(h).ok_or_else(|| Error::Numerical {
        message: format!("{what} is not positive definite"),
        condition: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let condition = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
    if condition > MAX_CONDITION || scale == 0.0 {
        return Err(Error::Numerical {
            message: format!("{what} is numerically singular"),
            condition,
        });
    }
    Ok(chol)
}

/// Solve `h x = rhs` for symmetric positive definite `h`, with one step of
/// iterative refinement.
pub fn spd_solve(h: &Matrix, rhs: &Vector, what: &str) -> Result<Vector> {
    let chol = checked_cholesky(h.clone(), what)?;
    let mut x = chol.solve(rhs);
    let r = rhs - h * &x;
    x += chol.solve(&r);
    Ok(x)
}
