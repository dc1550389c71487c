//! Positive semidefinite metrics `M` and the semi-norm `‖x‖²_M = xᵀMx`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{checked_cholesky, power_iteration};
use crate::{Matrix, Vector};

/// Symmetric PSD matrix together with a cached upper bound on its largest
/// eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMetric {
    matrix: Matrix,
    lambda_max: f64,
}

impl DenseMetric {
    pub fn new(matrix: Matrix) -> Result<Self> {
        let n = matrix.nrows();
        check_len("dense metric columns", n, matrix.ncols())?;
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::arg(format!(
                        "metric is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let (est, _) = power_iteration(|v| &matrix * v, n, 1e-10, None);
        // cheap PSD test: a tiny diagonal shift must make it factorizable
        if n > 0 && matrix.amax() > 0.0 {
            let mut shifted = matrix.clone();
            for i in 0..n {
                shifted[(i, i)] += 1e-10 * est.max(scale);
            }
            if nalgebra::Cholesky::new(shifted).is_none() {
                return Err(Error::arg("metric is not positive semidefinite"));
            }
        }
        Ok(DenseMetric {
            matrix,
            lambda_max: est * (1.0 + 1e-8),
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Zero,
    ScaledIdentity(f64),
    Diagonal(Vector),
    Dense(DenseMetric),
}

impl Default for Metric {
    fn default() -> Self {
        Metric::Zero
    }
}

impl Metric {
    pub fn scaled_identity(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::arg(format!("scaled identity needs c >= 0, got {c}")));
        }
        Ok(if c == 0.0 {
            Metric::Zero
        } else {
            Metric::ScaledIdentity(c)
        })
    }

    pub fn diagonal(d: Vector) -> Result<Self> {
        if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg("diagonal metric entries must be nonnegative"));
        }
        Ok(Metric::Diagonal(d))
    }

    pub fn dense(m: Matrix) -> Result<Self> {
        Ok(Metric::Dense(DenseMetric::new(m)?))
    }

    /// Dimension required by the representation, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Metric::Zero | Metric::ScaledIdentity(_) => None,
            Metric::Diagonal(d) => Some(d.len()),
            Metric::Dense(d) => Some(d.matrix.nrows()),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_len("metric dimension", n, d),
            None => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Metric::Zero => true,
            Metric::ScaledIdentity(c) => *c == 0.0,
            Metric::Diagonal(d) => d.iter().all(|&v| v == 0.0),
            Metric::Dense(d) => d.matrix.iter().all(|&v| v == 0.0),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Metric::Zero => Vector::zeros(x.len()),
            Metric::ScaledIdentity(c) => x * *c,
            Metric::Diagonal(d) => d.component_mul(x),
            Metric::Dense(d) => &d.matrix * x,
        }
    }

    pub fn seminorm_sq(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.seminorm_sq_unchecked(x))
    }

    pub(crate) fn seminorm_sq_unchecked(&self, x: &Vector) -> f64 {
        match self {
            Metric::Zero => 0.0,
            Metric::ScaledIdentity(c) => c * x.norm_squared(),
            Metric::Diagonal(d) => d.iter().zip(x.iter()).map(|(di, xi)| di * xi * xi).sum(),
            Metric::Dense(d) => x.dot(&(&d.matrix * x)).max(0.0),
        }
    }

    /// Upper bound on the largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        match self {
            Metric::Zero => 0.0,
            Metric::ScaledIdentity(c) => *c,
            Metric::Diagonal(d) => d.iter().fold(0.0, |a: f64, &b| a.max(b)),
            Metric::Dense(d) => d.lambda_max,
        }
    }

    /// Smallest eigenvalue for the scalar/diagonal forms; `None` for dense.
    pub fn lambda_min(&self) -> Option<f64> {
        match self {
            Metric::Zero => Some(0.0),
            Metric::ScaledIdentity(c) => Some(*c),
            Metric::Diagonal(d) => Some(d.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b))),
            Metric::Dense(_) => None,
        }
    }

    /// `self ⪰ other` in the PSD order, when decidable from the representations.
    pub fn dominates(&self, other: &Metric) -> Option<bool> {
        use Metric::*;
        match (self, other) {
            (_, Zero) => Some(true),
            (Zero, o) => Some(o.is_zero()),
            (ScaledIdentity(a), ScaledIdentity(b)) => Some(a >= b),
            (ScaledIdentity(a), Diagonal(d)) => Some(d.iter().all(|&v| *a >= v)),
            (Diagonal(d), ScaledIdentity(b)) => Some(d.iter().all(|&v| v >= *b)),
            (Diagonal(a), Diagonal(b)) => {
                if a.len() != b.len() {
                    return None;
                }
                Some(a.iter().zip(b.iter()).all(|(x, y)| x >= y))
            }
            (Dense(_), _) | (_, Dense(_)) => {
                if self == other {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    /// `coef · M` added into a dense matrix.
    pub(crate) fn add_to(&self, coef: f64, h: &mut Matrix) {
        match self {
            Metric::Zero => {}
            Metric::ScaledIdentity(c) => {
                for i in 0..h.nrows() {
                    h[(i, i)] += coef * c;
                }
            }
            Metric::Diagonal(d) => {
                for i in 0..h.nrows() {
                    h[(i, i)] += coef * d[i];
                }
            }
            Metric::Dense(d) => *h += &d.matrix * coef,
        }
    }

    pub fn to_dense(&self, n: usize) -> Matrix {
        let mut h = Matrix::zeros(n, n);
        self.add_to(1.0, &mut h);
        h
    }

    /// Positive definiteness test of `self + sigma·AᵀA` by factorization.
    pub fn is_definite_with(&self, a: &Matrix, sigma: f64) -> bool {
        let mut h = a.tr_mul(a) * sigma;
        self.add_to(1.0, &mut h);
        checked_cholesky(h, "P + σAᵀA").is_ok()
    }
}
