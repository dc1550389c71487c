//! ALM-type reference methods: proximal ALM (plain ALM when `P = 0`),
//! linearized ALM and the accelerated linearized ALM.

use crate::error::{Error, Result};
use crate::function::FunctionKind;
use crate::inner::{solve_subproblem, QuadraticModel};
use crate::metric::Metric;
use crate::problem::ProblemSpec;
use crate::Vector;

use super::params::{AalmParams, AlmParams};
use super::state::{AalmState, SolverState};
use super::trace::IterationRecord;

fn alm_step(
    p: &ProblemSpec,
    params: &AlmParams,
    st: &SolverState,
    linearized: bool,
) -> Result<(SolverState, IterationRecord)> {
    let sigma = params.sigma;
    let pm = &params.proximal;
    let a = p.a();
    let b = p.b();
    let (extra, mut linear) = if linearized {
        (None, p.grad_g(&st.x)?)
    } else {
        match p.g().map(|g| g.kind()) {
            None | Some(FunctionKind::Zero) => (None, Vector::zeros(p.n())),
            Some(FunctionKind::Quadratic { hessian, linear }) => (Some(hessian), linear.clone()),
            Some(_) => {
                return Err(Error::capability(
                    "proximal ALM keeps g exactly and needs it quadratic; use the linearized ALM",
                ))
            }
        }
    };
    // ⟨Aᵀλ, x⟩ + (σ/2)‖Ax − b‖² + ½‖x − xₖ‖²_P, constants dropped
    linear += a.tr_mul(&(&st.lambda - b * sigma));
    linear -= pm.apply(&st.x);
    let mut model = QuadraticModel::new(1.0, pm, sigma, a, p.a_norm_sq(), extra, linear)?;
    if p.f().is_zero() {
        model = model.with_gram(p.gram());
    }
    let target = params.inner.eps.target(st.k, b.norm());
    let report = solve_subproblem(p.f(), &model, &st.x, target, params.inner.max_iter)?;

    let x_next = report.solution;
    let ax_next = a * &x_next;
    let r = &ax_next - b;
    let lambda_next = &st.lambda + &r * sigma;
    let record = IterationRecord {
        k: st.k + 1,
        objective: p.objective(&x_next),
        obj_gap: None,
        feas: r.norm(),
        energy: None,
        eps_norm: report.residual_norm,
        inner_iters: report.iterations,
        inner_converged: report.converged,
        time_ms: 0.0,
        step_sq: None,
        vectors: None,
    };
    Ok((
        SolverState {
            k: st.k + 1,
            x_prev: st.x.clone(),
            x: x_next,
            lambda_prev: st.lambda.clone(),
            lambda: lambda_next,
            ax: ax_next,
        },
        record,
    ))
}

/// `xₖ₊₁ = argmin F(x) + ⟨Aᵀλₖ, x⟩ + (σ/2)‖Ax − b‖² + ½‖x − xₖ‖²_P`,
/// `λₖ₊₁ = λₖ + σ(Axₖ₊₁ − b)`.
pub fn prox_alm_step(
    p: &ProblemSpec,
    params: &AlmParams,
    st: &SolverState,
) -> Result<(SolverState, IterationRecord)> {
    alm_step(p, params, st, false)
}

/// Proximal ALM with `P = 0`.
pub fn plain_alm_step(p: &ProblemSpec, params: &AlmParams, st: &SolverState) -> Result<(SolverState, IterationRecord)> {
    let plain = AlmParams {
        proximal: Metric::Zero,
        ..params.clone()
    };
    alm_step(p, &plain, st, false)
}

/// Proximal ALM with `g` replaced by `⟨∇g(xₖ), x⟩`.
pub fn linearized_alm_step(
    p: &ProblemSpec,
    params: &AlmParams,
    st: &SolverState,
) -> Result<(SolverState, IterationRecord)> {
    alm_step(p, params, st, true)
}

/// One step of the accelerated linearized ALM:
///
/// ```text
/// x̂ₖ   = (1−αₖ)x̄ₖ + αₖxₖ
/// xₖ₊₁ = argmin f(x) + (βₖ/2)‖Ax−b‖² + ½‖x−xₖ‖²_{Pₖ} + ⟨∇g(x̂ₖ) + Aᵀλₖ, x⟩
/// x̄ₖ₊₁ = (1−αₖ)x̄ₖ + αₖxₖ₊₁
/// λₖ₊₁ = λₖ + γₖ(Axₖ₊₁ − b)
/// ```
///
/// The record reports objective and feasibility at `x̄ₖ₊₁`.
pub fn aalm_step(p: &ProblemSpec, params: &AalmParams, st: &AalmState) -> Result<(AalmState, IterationRecord)> {
    let k = st.k;
    let kf = k as f64;
    let w = AalmParams::weight(k);
    let beta = params.penalty * kf;
    let gamma = beta;
    let pk = Metric::scaled_identity(params.prox_scale / kf)?;
    let a = p.a();
    let b = p.b();

    let x_hat = &st.x_bar * (1.0 - w) + &st.x * w;
    let mut linear = p.grad_g(&x_hat)? + a.tr_mul(&(&st.lambda - b * beta));
    linear -= pk.apply(&st.x);
    let mut model = QuadraticModel::new(1.0, &pk, beta, a, p.a_norm_sq(), None, linear)?;
    if p.f().is_zero() {
        model = model.with_gram(p.gram());
    }
    let target = params.inner.eps.target(k, b.norm());
    let report = solve_subproblem(p.f(), &model, &st.x, target, params.inner.max_iter)?;

    let x_next = report.solution;
    let x_bar_next = &st.x_bar * (1.0 - w) + &x_next * w;
    let lambda_next = &st.lambda + (a * &x_next - b) * gamma;
    let record = IterationRecord {
        k: k + 1,
        objective: p.objective(&x_bar_next),
        obj_gap: None,
        feas: p.feasibility(&x_bar_next),
        energy: None,
        eps_norm: report.residual_norm,
        inner_iters: report.iterations,
        inner_converged: report.converged,
        time_ms: 0.0,
        step_sq: None,
        vectors: None,
    };
    Ok((
        AalmState {
            k: k + 1,
            x: x_next,
            x_bar: x_bar_next,
            lambda: lambda_next,
        },
        record,
    ))
}
