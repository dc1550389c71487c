//! Outer iterations: the inertial primal-dual method, its inexact linearized
//! variant and the ALM-type baselines, plus a run driver producing traces.

mod baselines;
mod ippd;
pub mod params;
mod run;
pub mod state;
pub mod trace;

pub use baselines::{aalm_step, linearized_alm_step, plain_alm_step, prox_alm_step};
pub use ippd::{iilppd_step, ippd_step};
pub use params::{
    AalmParams, AlgParams, AlmParams, EpsSchedule, InjectedEps, InnerPolicy, MetricSchedule, StopRule,
};
pub use run::{run, run_with_observer, Method, RunOptions};
pub use state::{AalmState, Derived, SolverState, StepVectors};
pub use trace::{IterationRecord, StopReason, Trace, TraceSummary, TraceTable};

use crate::{Matrix, Vector};

/// `current + ((k−2)/(k+α−2))·(current − previous)`.
pub fn extrapolate(k: usize, alpha: f64, current: &Vector, previous: &Vector) -> Vector {
    let kf = k as f64;
    let theta = (kf - 2.0) / (kf + alpha - 2.0);
    current + (current - previous) * theta
}

/// `((k+α−2)/(α−1))·bar − ((k−1)/(α−1))·current`.
///
/// Gives `λ̂ₖ` from `(λ̄ₖ, λₖ)` and `x̂ₖ` from `(x̄ₖ, xₖ)`.
pub fn dual_anchor(k: usize, alpha: f64, bar: &Vector, current: &Vector) -> Vector {
    let kf = k as f64;
    bar * ((kf + alpha - 2.0) / (alpha - 1.0)) - current * ((kf - 1.0) / (alpha - 1.0))
}

/// `ηₖ = ((k−1)/(k+α−2))·Axₖ + ((α−1)/(k+α−2))·b`.
pub fn eta_target(k: usize, alpha: f64, a: &Matrix, x_k: &Vector, b: &Vector) -> Vector {
    eta_from_image(k, alpha, &(a * x_k), b)
}

pub(crate) fn eta_from_image(k: usize, alpha: f64, ax: &Vector, b: &Vector) -> Vector {
    let kf = k as f64;
    let d = kf + alpha - 2.0;
    ax * ((kf - 1.0) / d) + b * ((alpha - 1.0) / d)
}

/// Step 3: `λₖ₊₁ = λ̄ₖ + (sk/(k+α−2))·(Axₖ₊₁ − b + ((k−1)/(α−1))·A(xₖ₊₁ − xₖ))`.
#[allow(clippy::too_many_arguments)]
pub fn dual_update(
    k: usize,
    alpha: f64,
    s: f64,
    lambda_bar: &Vector,
    a: &Matrix,
    x_next: &Vector,
    x_k: &Vector,
    b: &Vector,
) -> Vector {
    dual_update_from_images(k, alpha, s, lambda_bar, &(a * x_next), &(a * x_k), b)
}

pub(crate) fn dual_update_from_images(
    k: usize,
    alpha: f64,
    s: f64,
    lambda_bar: &Vector,
    ax_next: &Vector,
    ax_k: &Vector,
    b: &Vector,
) -> Vector {
    let kf = k as f64;
    let step = s * kf / (kf + alpha - 2.0);
    let corr = (ax_next - b) + (ax_next - ax_k) * ((kf - 1.0) / (alpha - 1.0));
    lambda_bar + corr * step
}
