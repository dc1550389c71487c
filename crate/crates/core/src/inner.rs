//! Step-2 subproblems: assembly of the smooth quadratic model and its
//! solution by a direct factorization or by FISTA.
//!
//! Every subproblem has the form `min_x f(x) + ½xᵀHx + ℓᵀx` with
//! `H = c₁M + c₂AᵀA (+ Q)`.

use crate::error::{check_len, Error, Result};
use crate::function::{FunctionDescriptor, FunctionKind};
use crate::linalg::spd_solve;
use crate::metric::Metric;
use crate::problem::ProblemSpec;
use crate::prox::prox_dispatch;
use crate::{Matrix, Vector};

/// Smooth part `½xᵀ(c₁M + c₂AᵀA + Q)x + ℓᵀx` of a subproblem.
#[derive(Debug, Clone)]
pub struct QuadraticModel<'a> {
    pub metric_coef: f64,
    pub metric: &'a Metric,
    pub gram_coef: f64,
    pub a: &'a Matrix,
    /// Precomputed `AᵀA`, used only by dense assembly.
    pub gram: Option<&'a Matrix>,
    pub extra: Option<&'a Metric>,
    pub linear: Vector,
    /// Upper bound on `λmax(H)`.
    pub lipschitz: f64,
}

impl<'a> QuadraticModel<'a> {
    /// Builds the model; `a_norm_sq` must upper-bound `‖A‖²`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        metric_coef: f64,
        metric: &'a Metric,
        gram_coef: f64,
        a: &'a Matrix,
        a_norm_sq: f64,
        extra: Option<&'a Metric>,
        linear: Vector,
    ) -> Result<Self> {
        if !(metric_coef >= 0.0) || !(gram_coef >= 0.0) {
            return Err(Error::arg(format!(
                "model coefficients must be nonnegative, got {metric_coef}, {gram_coef}"
            )));
        }
        let n = linear.len();
        metric.check_dim(n)?;
        if gram_coef > 0.0 {
            check_len("model A columns", n, a.ncols())?;
        }
        if let Some(q) = extra {
            q.check_dim(n)?;
        }
        let lipschitz = metric_coef * metric.lambda_max()
            + gram_coef * a_norm_sq
            + extra.map_or(0.0, |q| q.lambda_max());
        Ok(QuadraticModel {
            metric_coef,
            metric,
            gram_coef,
            a,
            gram: None,
            extra,
            linear,
            lipschitz,
        })
    }

    pub fn with_gram(mut self, gram: &'a Matrix) -> Self {
        self.gram = Some(gram);
        self
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn hess_vec(&self, v: &Vector) -> Vector {
        let mut out = self.metric.apply(v) * self.metric_coef;
        if self.gram_coef > 0.0 {
            out += self.a.tr_mul(&(self.a * v)) * self.gram_coef;
        }
        if let Some(q) = self.extra {
            out += q.apply(v);
        }
        out
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.hess_vec(x) + &self.linear
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.hess_vec(x)) + self.linear.dot(x)
    }

    pub fn dense_hessian(&self) -> Matrix {
        let n = self.dim();
        let mut h = Matrix::zeros(n, n);
        self.metric.add_to(self.metric_coef, &mut h);
        if self.gram_coef > 0.0 {
            match self.gram {
                Some(g) => h += g * self.gram_coef,
                None => h += self.a.tr_mul(self.a) * self.gram_coef,
            }
        }
        if let Some(q) = self.extra {
            q.add_to(1.0, &mut h);
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct InnerReport {
    pub solution: Vector,
    pub iterations: usize,
    /// Prox-gradient mapping norm at the returned solution.
    pub residual_norm: f64,
    pub converged: bool,
    /// `ε̃` with `0 ∈ ∂f(x) + ∇m(x) − ε̃` at the returned `x`; `‖ε̃‖ ≤ residual_norm`.
    pub perturbation: Vector,
}

/// Coefficients `(c₁, ρ)` of the metric and the penalty terms at step `k`.
pub fn subproblem_coefficients(k: usize, alpha: f64, s: f64) -> (f64, f64) {
    let kf = k as f64;
    let c1 = (kf + alpha - 2.0) / (s * kf);
    let rho = s * kf * (kf + alpha - 2.0) / ((alpha - 1.0) * (alpha - 1.0));
    (c1, rho)
}

fn check_step_params(k: usize, alpha: f64, s: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::arg("iteration index starts at k = 1"));
    }
    if !(alpha >= 3.0) {
        return Err(Error::arg(format!("alpha must be >= 3, got {alpha}")));
    }
    if !(s > 0.0) {
        return Err(Error::arg(format!("s must be positive, got {s}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn assemble_common<'a>(
    p: &'a ProblemSpec,
    k: usize,
    alpha: f64,
    s: f64,
    m_k: &'a Metric,
    x_bar: &Vector,
    eta: &Vector,
    lambda_hat: &Vector,
    extra: Option<&'a Metric>,
    mut linear: Vector,
) -> Result<QuadraticModel<'a>> {
    check_step_params(k, alpha, s)?;
    check_len("x̄", p.n(), x_bar.len())?;
    check_len("η", p.m(), eta.len())?;
    check_len("λ̂", p.m(), lambda_hat.len())?;
    m_k.check_dim(p.n())?;
    let (c1, rho) = subproblem_coefficients(k, alpha, s);
    let a = p.a();
    linear -= m_k.apply(x_bar) * c1;
    linear += a.tr_mul(&(lambda_hat - eta * rho));
    let model = QuadraticModel::new(c1, m_k, rho, a, p.a_norm_sq(), extra, linear)?;
    // dense assembly only happens for the direct solve
    Ok(if p.f().is_zero() {
        model.with_gram(p.gram())
    } else {
        model
    })
}

/// Algorithm 1 subproblem:
/// `F(x) + (c₁/2)‖x − x̄‖²_M + (ρ/2)‖Ax − η‖² + ⟨Aᵀλ̂, x⟩`.
///
/// A quadratic `g` is kept exactly inside the model.
#[allow(clippy::too_many_arguments)]
pub fn assemble_subproblem_alg1<'a>(
    p: &'a ProblemSpec,
    k: usize,
    alpha: f64,
    s: f64,
    m_k: &'a Metric,
    x_bar: &Vector,
    eta: &Vector,
    lambda_hat: &Vector,
) -> Result<(&'a FunctionDescriptor, QuadraticModel<'a>)> {
    let (extra, linear) = match p.g().map(|g| g.kind()) {
        None | Some(FunctionKind::Zero) => (None, Vector::zeros(p.n())),
        Some(FunctionKind::Quadratic { hessian, linear }) => (Some(hessian), linear.clone()),
        Some(_) => {
            return Err(Error::capability(
                "algorithm 1 needs g absent or quadratic; use the linearized method",
            ))
        }
    };
    let model = assemble_common(p, k, alpha, s, m_k, x_bar, eta, lambda_hat, extra, linear)?;
    Ok((p.f(), model))
}

/// Algorithm 2 subproblem: as [`assemble_subproblem_alg1`] with `g`
/// linearized at `x̄` and the linear term shifted by `−ε`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_subproblem_alg2<'a>(
    p: &'a ProblemSpec,
    k: usize,
    alpha: f64,
    s: f64,
    m_k: &'a Metric,
    x_bar: &Vector,
    eta: &Vector,
    lambda_hat: &Vector,
    eps: &Vector,
) -> Result<(&'a FunctionDescriptor, QuadraticModel<'a>)> {
    let g = p
        .g()
        .ok_or_else(|| Error::capability("the linearized method needs a smooth part g"))?;
    check_len("ε", p.n(), eps.len())?;
    check_len("x̄", p.n(), x_bar.len())?;
    let linear = g.gradient(x_bar)? - eps;
    let model = assemble_common(p, k, alpha, s, m_k, x_bar, eta, lambda_hat, None, linear)?;
    Ok((p.f(), model))
}

/// `Φ(z) − Φ(x)` for the composite objective, evaluated from the difference
/// `z − x` so that it stays resolvable near the minimizer where both values
/// agree to machine precision.
fn composite_decrease(
    f: &FunctionDescriptor,
    model: &QuadraticModel<'_>,
    z: &Vector,
    hz: &Vector,
    x: &Vector,
    hx: &Vector,
) -> f64 {
    let smooth: f64 = (0..z.len())
        .map(|i| (z[i] - x[i]) * (model.linear[i] + 0.5 * (hz[i] + hx[i])))
        .sum();
    let nonsmooth = match f.kind() {
        FunctionKind::Zero => 0.0,
        FunctionKind::L1 => (0..z.len()).map(|i| z[i].abs() - x[i].abs()).sum(),
        FunctionKind::NonnegIndicator => f.value(z) - f.value(x),
        FunctionKind::L1PlusScaledSq { beta } => (0..z.len())
            .map(|i| z[i].abs() - x[i].abs() + 0.5 * beta * (z[i] - x[i]) * (z[i] + x[i]))
            .sum(),
        _ => f.value(z) - f.value(x),
    };
    if nonsmooth.is_nan() {
        // ∞ − ∞ for an infeasible start: any feasible step is progress
        return if f.value(z).is_finite() { -1.0 } else { 0.0 };
    }
    nonsmooth + smooth
}

/// Prox-gradient step `T(x) = prox_{f/L}(x − ∇m(x)/L)`.
fn forward_backward(f: &FunctionDescriptor, x: &Vector, grad: &Vector, l: f64) -> Result<Vector> {
    prox_dispatch(f, &(x - grad / l), 1.0 / l)
}

/// FISTA with function-value restart.
///
/// Iterates are kept monotone in the composite objective; a rejected step
/// resets the momentum. Each iteration costs one Hessian application.
/// Termination is tested at the monotone iterate `x` through
/// `r = L‖x − T(x)‖`; the returned solution is `T(x)`.
pub fn fista(
    f_part: &FunctionDescriptor,
    model: &QuadraticModel<'_>,
    x0: &Vector,
    target_residual: f64,
    max_iter: usize,
) -> Result<InnerReport> {
    check_len("fista start", model.dim(), x0.len())?;
    if !f_part.has_prox() {
        return Err(Error::capability("FISTA needs f with a prox rule"));
    }
    let l = if model.lipschitz > 0.0 { model.lipschitz } else { 1.0 };

    let mut x = x0.clone();
    let mut hx = model.hess_vec(&x);
    let mut x_prev = x.clone();
    let mut hx_prev = hx.clone();
    let mut t = 1.0_f64;
    let mut momentum = 0.0_f64;
    let mut iterations = 0;

    loop {
        let grad_x = &hx + &model.linear;
        let p = forward_backward(f_part, &x, &grad_x, l)?;
        let residual = l * (&x - &p).norm();
        if residual <= target_residual || iterations >= max_iter || !residual.is_finite() {
            let hp = model.hess_vec(&p);
            // ε̃ = (LI − H)(x − p)
            let perturbation = (&x - &p) * l - (&hx - &hp);
            return Ok(InnerReport {
                converged: residual <= target_residual,
                solution: p,
                iterations,
                residual_norm: residual,
                perturbation,
            });
        }
        iterations += 1;

        let y = &x + (&x - &x_prev) * momentum;
        let hy = &hx + (&hx - &hx_prev) * momentum;
        let grad_y = hy + &model.linear;
        let z = forward_backward(f_part, &y, &grad_y, l)?;
        let hz = model.hess_vec(&z);

        if composite_decrease(f_part, model, &z, &hz, &x, &hx) <= 0.0 {
            x_prev = std::mem::replace(&mut x, z);
            hx_prev = std::mem::replace(&mut hx, hz);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            momentum = (t - 1.0) / t_next;
            t = t_next;
        } else {
            x_prev.copy_from(&x);
            hx_prev.copy_from(&hx);
            t = 1.0;
            momentum = 0.0;
        }
    }
}

/// Exact minimizer of the model when `f` is zero: `Hx = −ℓ`.
pub fn direct_solve(f_part: &FunctionDescriptor, model: &QuadraticModel<'_>) -> Result<InnerReport> {
    if !f_part.is_zero() {
        return Err(Error::capability(format!(
            "direct solve needs f = zero, got {}",
            f_part.kind_name()
        )));
    }
    let h = model.dense_hessian();
    let rhs = -&model.linear;
    let x = spd_solve(&h, &rhs, "subproblem Hessian")?;
    let perturbation = &h * &x - &rhs;
    Ok(InnerReport {
        residual_norm: perturbation.norm(),
        solution: x,
        iterations: 1,
        converged: true,
        perturbation,
    })
}

/// Direct solve when `f` is zero, FISTA otherwise.
pub fn solve_subproblem(
    f_part: &FunctionDescriptor,
    model: &QuadraticModel<'_>,
    x0: &Vector,
    target_residual: f64,
    max_iter: usize,
) -> Result<InnerReport> {
    if f_part.is_zero() {
        let mut report = direct_solve(f_part, model)?;
        report.converged = report.residual_norm <= target_residual.max(1e-10 * (1.0 + model.linear.norm()));
        Ok(report)
    } else {
        fista(f_part, model, x0, target_residual, max_iter)
    }
}

/// The mapping residual, read as the norm of the subproblem perturbation.
pub fn subproblem_residual_as_epsilon(report: &InnerReport) -> f64 {
    report.residual_norm
}
