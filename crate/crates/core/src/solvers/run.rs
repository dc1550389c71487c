use std::time::Instant;

use crate::diagnostics::{energy, initial_energy};
use crate::error::{Error, LastGoodState, Result};
use crate::problem::{KKTPoint, ProblemSpec};
use crate::Vector;

use super::params::{AalmParams, AlgParams, AlmParams, StopRule};
use super::state::{AalmState, SolverState};
use super::trace::{IterationRecord, StopReason, Trace, TraceSummary};
use super::{aalm_step, dual_anchor, iilppd_step, ippd_step, linearized_alm_step, plain_alm_step, prox_alm_step};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Ippd(AlgParams),
    Iilppd(AlgParams),
    Alm(AlmParams),
    ProxAlm(AlmParams),
    LinAlm(AlmParams),
    Aalm(AalmParams),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ippd(_) => "ippd",
            Method::Iilppd(_) => "iilppd",
            Method::Alm(_) => "alm",
            Method::ProxAlm(_) => "prox-alm",
            Method::LinAlm(_) => "lin-alm",
            Method::Aalm(_) => "aalm",
        }
    }

    pub fn max_outer(&self) -> usize {
        match self {
            Method::Ippd(a) | Method::Iilppd(a) => a.max_outer,
            Method::Alm(a) | Method::ProxAlm(a) | Method::LinAlm(a) => a.max_outer,
            Method::Aalm(a) => a.max_outer,
        }
    }

    pub fn stop(&self) -> StopRule {
        match self {
            Method::Ippd(a) | Method::Iilppd(a) => a.stop,
            Method::Alm(a) | Method::ProxAlm(a) | Method::LinAlm(a) => a.stop,
            Method::Aalm(a) => a.stop,
        }
    }

    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        match self {
            Method::Ippd(a) => a.validate(p, false),
            Method::Iilppd(a) => a.validate(p, true),
            Method::Alm(a) | Method::ProxAlm(a) | Method::LinAlm(a) => a.validate(p),
            Method::Aalm(a) => a.validate(p),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub x0: Option<Vector>,
    pub lambda0: Option<Vector>,
    /// KKT point for energies; falls back to the problem's reference.
    pub kkt: Option<KKTPoint>,
    pub retain_vectors: bool,
}

enum Iterate {
    Pd(SolverState),
    Aalm(AalmState),
}

impl Iterate {
    fn report_point(&self) -> (&Vector, &Vector) {
        match self {
            Iterate::Pd(s) => (&s.x, &s.lambda),
            Iterate::Aalm(s) => (&s.x_bar, &s.lambda),
        }
    }

    fn k(&self) -> usize {
        match self {
            Iterate::Pd(s) => s.k,
            Iterate::Aalm(s) => s.k,
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Iterate::Pd(s) => s.is_finite(),
            Iterate::Aalm(s) => s.x.iter().chain(s.x_bar.iter()).chain(s.lambda.iter()).all(|v| v.is_finite()),
        }
    }
}

fn rel_error(p: &ProblemSpec, x: &Vector) -> Option<f64> {
    let r = p.reference()?;
    let d = (x - &r.x_star).norm();
    let scale = r.x_star.norm();
    Some(if scale > 0.0 { d / scale } else { d })
}

pub fn run(p: &ProblemSpec, method: &Method, opts: &RunOptions) -> Result<Trace> {
    run_with_observer(p, method, opts, &mut |_| {})
}

/// Iterates until the stop rule fires or `max_outer` steps were taken.
/// `observer` sees every record before it is stored.
pub fn run_with_observer(
    p: &ProblemSpec,
    method: &Method,
    opts: &RunOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<Trace> {
    method.validate(p)?;
    let start = Instant::now();
    let x0 = opts.x0.clone().unwrap_or_else(|| Vector::zeros(p.n()));
    let l0 = opts.lambda0.clone().unwrap_or_else(|| Vector::zeros(p.m()));
    let kkt = opts.kkt.clone().or_else(|| p.kkt_point());
    let f_star = p.reference().map(|r| r.f_star);

    let mut it = match method {
        Method::Aalm(_) => Iterate::Aalm(AalmState::new(p, x0, l0)?),
        _ => Iterate::Pd(SolverState::new(p, x0, l0)?),
    };
    let inertial = match method {
        Method::Ippd(a) | Method::Iilppd(a) => Some(a),
        _ => None,
    };
    let e1 = match (&kkt, inertial, &it) {
        (Some(kkt), Some(a), Iterate::Pd(s)) => Some(initial_energy(a.metric.at(0), kkt, &s.x, &s.lambda)?),
        _ => None,
    };
    let perturbed = matches!(method, Method::Iilppd(_));
    let mut eps_correction = 0.0;

    let stop = method.stop();
    let mut records = Vec::new();
    let mut reason = StopReason::MaxIter;
    for _ in 0..method.max_outer() {
        let (next, mut rec) = match (&it, method) {
            (Iterate::Pd(s), Method::Ippd(a)) => {
                let (n, r) = ippd_step(p, a, s)?;
                (Iterate::Pd(n), r)
            }
            (Iterate::Pd(s), Method::Iilppd(a)) => {
                let (n, r) = iilppd_step(p, a, s)?;
                (Iterate::Pd(n), r)
            }
            (Iterate::Pd(s), Method::Alm(a)) => {
                let (n, r) = plain_alm_step(p, a, s)?;
                (Iterate::Pd(n), r)
            }
            (Iterate::Pd(s), Method::ProxAlm(a)) => {
                let (n, r) = prox_alm_step(p, a, s)?;
                (Iterate::Pd(n), r)
            }
            (Iterate::Pd(s), Method::LinAlm(a)) => {
                let (n, r) = linearized_alm_step(p, a, s)?;
                (Iterate::Pd(n), r)
            }
            (Iterate::Aalm(s), Method::Aalm(a)) => {
                let (n, r) = aalm_step(p, a, s)?;
                (Iterate::Aalm(n), r)
            }
            _ => unreachable!("iterate kind follows the method"),
        };
        if !next.is_finite() || !rec.feas.is_finite() {
            let (x, lambda) = it.report_point();
            return Err(Error::Diverged(Box::new(LastGoodState {
                k: it.k(),
                x: x.clone(),
                lambda: lambda.clone(),
            })));
        }

        if let (Some(kkt), Some(a), Iterate::Pd(s)) = (&kkt, inertial, &next) {
            let d = s.derive(a.alpha, p.b());
            let e = energy(p, kkt, a.alpha, a.s, a.metric.at(s.k - 1), s.k, &s.x, &d.x_bar, &s.lambda, &d.lambda_bar)?;
            if perturbed {
                let eps = &rec.vectors.as_ref().expect("inertial steps carry vectors").eps;
                let x_hat = dual_anchor(s.k, a.alpha, &d.x_bar, &s.x);
                eps_correction += a.s * (s.k as f64 - 1.0) / (a.alpha - 1.0) * (x_hat - &kkt.x_star).dot(eps);
            }
            rec.energy = Some(e - eps_correction);
        }
        if let Some(fs) = f_star {
            rec.obj_gap = Some((rec.objective - fs).abs());
        }
        rec.time_ms = start.elapsed().as_secs_f64() * 1e3;
        if !opts.retain_vectors {
            rec.vectors = None;
        }
        observer(&rec);

        let (x, _) = next.report_point();
        let done = match stop {
            StopRule::FeasTol(t) => rec.feas <= t,
            StopRule::ResPlusRel(t) => rec.feas + rel_error(p, x).unwrap_or(f64::INFINITY) <= t,
            StopRule::MaxIterOnly => false,
        };
        records.push(rec);
        it = next;
        if done {
            reason = StopReason::Converged;
            break;
        }
    }

    let (x, lambda) = it.report_point();
    let summary = TraceSummary {
        algorithm: method.name().to_string(),
        iterations: records.len(),
        res: p.feasibility(x),
        rel: rel_error(p, x),
        objective: p.objective(x),
        stop: reason,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Trace {
        records,
        summary,
        e1,
        x: x.clone(),
        lambda: lambda.clone(),
    })
}
