//! Closed-form proximal operators: `prox_{t f}(v) = argmin_x t f(x) + ½‖x − v‖²`.

use crate::error::{check_len, Error, Result};
use crate::function::{FunctionDescriptor, FunctionKind};
use crate::linalg::spd_solve;
use crate::metric::Metric;
use crate::Vector;

fn check_step(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("prox step must be a finite t >= 0, got {t}")))
    }
}

#[inline]
fn soft(v: f64, t: f64) -> f64 {
    // |v| == t lands on exactly zero
    let mag = v.abs() - t;
    if mag > 0.0 {
        v.signum() * mag
    } else {
        0.0
    }
}

/// Soft-thresholding.
pub fn prox_l1(v: &Vector, t: f64) -> Result<Vector> {
    check_step(t)?;
    Ok(v.map(|vi| soft(vi, t)))
}

pub fn project_nonneg(v: &Vector) -> Vector {
    v.map(|vi| vi.max(0.0))
}

/// Prox of `‖x‖₁ + (β/2)‖x‖²`: soft-threshold, then shrink by `1 + tβ`.
pub fn prox_l1_l2(v: &Vector, t: f64, beta: f64) -> Result<Vector> {
    check_step(t)?;
    if !(beta > 0.0) {
        return Err(Error::arg(format!("beta must be positive, got {beta}")));
    }
    let shrink = 1.0 + t * beta;
    Ok(v.map(|vi| soft(vi, t) / shrink))
}

/// Prox of `½xᵀQx + qᵀx`, i.e. the solution of `(I + tQ)x = v − tq`.
pub fn prox_quadratic(hessian: &Metric, linear: &Vector, v: &Vector, t: f64) -> Result<Vector> {
    check_step(t)?;
    check_len("quadratic prox", linear.len(), v.len())?;
    let rhs = v - linear * t;
    match hessian {
        Metric::Zero => Ok(rhs),
        Metric::ScaledIdentity(c) => Ok(rhs / (1.0 + t * c)),
        Metric::Diagonal(d) => Ok(Vector::from_fn(v.len(), |i, _| rhs[i] / (1.0 + t * d[i]))),
        Metric::Dense(_) => {
            let mut h = hessian.to_dense(v.len()) * t;
            for i in 0..v.len() {
                h[(i, i)] += 1.0;
            }
            spd_solve(&h, &rhs, "I + tQ")
        }
    }
}

/// Route to the closed form for the descriptor's kind.
pub fn prox_dispatch(d: &FunctionDescriptor, v: &Vector, t: f64) -> Result<Vector> {
    match d.kind() {
        FunctionKind::Zero => {
            check_step(t)?;
            Ok(v.clone())
        }
        FunctionKind::L1 => prox_l1(v, t),
        FunctionKind::NonnegIndicator => {
            check_step(t)?;
            Ok(project_nonneg(v))
        }
        FunctionKind::L1PlusScaledSq { beta } => prox_l1_l2(v, t, *beta),
        FunctionKind::Quadratic { hessian, linear } => prox_quadratic(hessian, linear, v, t),
        FunctionKind::Custom(c) => match &c.prox {
            Some(p) => {
                check_step(t)?;
                Ok(p(v, t))
            }
            None => Err(Error::capability(format!(
                "custom function '{}' has no prox rule",
                c.name
            ))),
        },
    }
}
