use crate::error::Result;
use crate::inner::{assemble_subproblem_alg1, assemble_subproblem_alg2, solve_subproblem};
use crate::problem::ProblemSpec;
use crate::Vector;

use super::dual_update_from_images;
use super::params::AlgParams;
use super::state::{SolverState, StepVectors};
use super::trace::IterationRecord;

fn inertial_step(
    p: &ProblemSpec,
    params: &AlgParams,
    st: &SolverState,
    linearized: bool,
) -> Result<(SolverState, IterationRecord)> {
    let (k, alpha, s) = (st.k, params.alpha, params.s);
    let b = p.b();
    let derived = st.derive(alpha, b);
    let m_k = params.metric.at(k);
    let target = params.inner.eps.target(k, b.norm());

    let injected = if linearized {
        params.injected_eps.as_ref().map(|e| e.at(k))
    } else {
        None
    };
    let (f, model) = if linearized {
        let zero;
        let eps = match &injected {
            Some(e) => e,
            None => {
                zero = Vector::zeros(p.n());
                &zero
            }
        };
        assemble_subproblem_alg2(p, k, alpha, s, m_k, &derived.x_bar, &derived.eta, &derived.lambda_hat, eps)?
    } else {
        assemble_subproblem_alg1(p, k, alpha, s, m_k, &derived.x_bar, &derived.eta, &derived.lambda_hat)?
    };
    let report = solve_subproblem(f, &model, &st.x, target, params.inner.max_iter)?;

    let x_next = report.solution;
    let ax_next = p.a() * &x_next;
    let lambda_next = dual_update_from_images(k, alpha, s, &derived.lambda_bar, &ax_next, &st.ax, b);

    let eps = match injected {
        Some(e) => e + &report.perturbation,
        None => report.perturbation,
    };
    let eps_norm = if linearized { eps.norm() } else { report.residual_norm };
    let step_sq = m_k.seminorm_sq_unchecked(&(&x_next - &derived.x_bar))
        + (&lambda_next - &derived.lambda_bar).norm_squared();

    let record = IterationRecord {
        k: k + 1,
        objective: p.objective(&x_next),
        obj_gap: None,
        feas: (&ax_next - b).norm(),
        energy: None,
        eps_norm,
        inner_iters: report.iterations,
        inner_converged: report.converged,
        time_ms: 0.0,
        step_sq: Some(step_sq),
        vectors: Some(Box::new(StepVectors {
            k,
            x: st.x.clone(),
            lambda: st.lambda.clone(),
            derived,
            eps,
            x_next: x_next.clone(),
            lambda_next: lambda_next.clone(),
        })),
    };
    let next = SolverState {
        k: k + 1,
        x_prev: st.x.clone(),
        x: x_next,
        lambda_prev: st.lambda.clone(),
        lambda: lambda_next,
        ax: ax_next,
    };
    Ok((next, record))
}

/// One step `k → k+1` of the inertial proximal primal-dual method.
///
/// A quadratic `g` stays inside the subproblem; any other smooth part is a
/// capability error.
pub fn ippd_step(p: &ProblemSpec, params: &AlgParams, st: &SolverState) -> Result<(SolverState, IterationRecord)> {
    inertial_step(p, params, st, false)
}

/// One step of the inexact linearized variant: `g` is linearized at `x̄ₖ`
/// and the realized `εₖ` (injected plus inner residual) is recorded.
pub fn iilppd_step(
    p: &ProblemSpec,
    params: &AlgParams,
    st: &SolverState,
) -> Result<(SolverState, IterationRecord)> {
    inertial_step(p, params, st, true)
}
