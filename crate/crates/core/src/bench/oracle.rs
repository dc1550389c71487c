//! High-accuracy reference solutions.
//!
//! Two independent methods (the exact inertial method and proximal ALM) each
//! run until an active-set polish of their iterate certifies a KKT point to
//! `tol`. The polish fixes the active set (zeros for `x ≥ 0`, support and signs
//! for ℓ1) and solves the resulting linear KKT system for the smallest
//! correction to the iterate, then repairs the active set until it is
//! consistent.

use crate::error::{Error, Result};
use crate::function::FunctionKind;
use crate::problem::{ProblemSpec, Provenance, ReferenceSolution};
use crate::solvers::{
    ippd_step, prox_alm_step, AlgParams, AlmParams, EpsSchedule, InnerPolicy, MetricSchedule, SolverState, StopRule,
};
use crate::{Matrix, Metric, Vector};

/// Relative agreement required between the two candidate solutions.
pub const ORACLE_AGREEMENT: f64 = 1e-6;
const MAX_OUTER: usize = 4000;
const POLISH_ROUNDS: usize = 40;

#[derive(Clone, Copy, PartialEq)]
enum Structure {
    Free,
    Nonneg,
    L1,
}

struct Smooth {
    hessian: Matrix,
    linear: Vector,
    structure: Structure,
}

fn smooth_part(p: &ProblemSpec) -> Option<Smooth> {
    let n = p.n();
    let (mut hessian, linear) = match p.g() {
        None => (Matrix::zeros(n, n), Vector::zeros(n)),
        Some(g) => match g.kind() {
            FunctionKind::Zero => (Matrix::zeros(n, n), Vector::zeros(n)),
            FunctionKind::Quadratic { hessian, linear } => (hessian.to_dense(n), linear.clone()),
            _ => return None,
        },
    };
    let structure = match p.f().kind() {
        FunctionKind::Zero => Structure::Free,
        FunctionKind::NonnegIndicator => Structure::Nonneg,
        FunctionKind::L1 => Structure::L1,
        FunctionKind::L1PlusScaledSq { beta } => {
            for i in 0..n {
                hessian[(i, i)] += beta;
            }
            Structure::L1
        }
        _ => return None,
    };
    Some(Smooth {
        hessian,
        linear,
        structure,
    })
}

/// Solves `K z = r` for the minimum-norm correction, with one refinement.
fn min_norm_correction(k: &Matrix, r: &Vector) -> Option<Vector> {
    if k.nrows() == 0 {
        return Some(Vector::zeros(0));
    }
    let svd = k.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * k.nrows() as f64;
    let mut d = svd.solve(r, eps).ok()?;
    let rr = r - k * &d;
    d += svd.solve(&rr, eps).ok()?;
    Some(d)
}

/// One linear solve with the active set fixed.
fn solve_fixed(
    p: &ProblemSpec,
    sm: &Smooth,
    free: &[usize],
    signs: &[f64],
    x: &Vector,
    lambda: &Vector,
) -> Option<(Vector, Vector)> {
    let (m, nf) = (p.m(), free.len());
    let a = p.a();
    let mut k = Matrix::zeros(nf + m, nf + m);
    let mut rhs = Vector::zeros(nf + m);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            k[(r, c)] = sm.hessian[(i, j)];
        }
        for l in 0..m {
            k[(r, nf + l)] = a[(l, i)];
            k[(nf + l, r)] = a[(l, i)];
        }
        rhs[r] = -sm.linear[i] - signs[r];
    }
    rhs.rows_mut(nf, m).copy_from(p.b());
    let mut z = Vector::zeros(nf + m);
    for (r, &i) in free.iter().enumerate() {
        z[r] = x[i];
    }
    z.rows_mut(nf, m).copy_from(lambda);
    let d = min_norm_correction(&k, &(&rhs - &k * &z))?;
    z += d;
    let mut xn = Vector::zeros(p.n());
    for (r, &i) in free.iter().enumerate() {
        xn[i] = z[r];
    }
    Some((xn, z.rows(nf, m).into_owned()))
}

/// Active-set polish of an approximate primal-dual pair.
fn polish(p: &ProblemSpec, sm: &Smooth, x: &Vector, lambda: &Vector) -> Option<(Vector, Vector)> {
    let n = p.n();
    let scale = x.amax().max(1.0);
    let thr = 1e-9 * scale;
    let mut sign = Vector::zeros(n);
    let mut is_free = vec![false; n];
    for i in 0..n {
        match sm.structure {
            Structure::Free => is_free[i] = true,
            Structure::Nonneg => is_free[i] = x[i] > thr,
            Structure::L1 => {
                if x[i].abs() > thr {
                    is_free[i] = true;
                    sign[i] = x[i].signum();
                }
            }
        }
    }
    let (mut x, mut lambda) = (x.clone(), lambda.clone());
    for _ in 0..POLISH_ROUNDS {
        let free: Vec<usize> = (0..n).filter(|&i| is_free[i]).collect();
        let signs: Vec<f64> = free.iter().map(|&i| sign[i]).collect();
        let (xn, ln) = solve_fixed(p, sm, &free, &signs, &x, &lambda)?;
        x = xn;
        lambda = ln;
        if sm.structure == Structure::Free {
            break;
        }
        let grad = &sm.hessian * &x + &sm.linear + p.a().tr_mul(&lambda);
        let gscale = grad.amax().max(1.0);
        let mut changed = false;
        for i in 0..n {
            match sm.structure {
                Structure::Nonneg if is_free[i] && x[i] < 0.0 => {
                    is_free[i] = false;
                    changed = true;
                }
                Structure::Nonneg if !is_free[i] && grad[i] < -1e-9 * gscale => {
                    is_free[i] = true;
                    changed = true;
                }
                Structure::L1 if is_free[i] && x[i] * sign[i] <= 0.0 => {
                    is_free[i] = false;
                    sign[i] = 0.0;
                    changed = true;
                }
                Structure::L1 if !is_free[i] && grad[i].abs() > 1.0 + 1e-9 => {
                    is_free[i] = true;
                    sign[i] = -grad[i].signum();
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
        for i in 0..n {
            if !is_free[i] {
                x[i] = 0.0;
            }
        }
    }
    Some((x, lambda))
}

fn certified(p: &ProblemSpec, x: &Vector, lambda: &Vector, tol: f64) -> bool {
    p.kkt_residual(x, lambda, None).map(|r| r.max() <= tol).unwrap_or(false)
}

fn try_polish(p: &ProblemSpec, sm: Option<&Smooth>, x: &Vector, lambda: &Vector, tol: f64) -> Option<(Vector, Vector)> {
    if certified(p, x, lambda, tol) {
        return Some((x.clone(), lambda.clone()));
    }
    let (xp, lp) = polish(p, sm?, x, lambda)?;
    certified(p, &xp, &lp, tol).then_some((xp, lp))
}

type Stepper<'a> = Box<dyn Fn(&SolverState) -> Result<SolverState> + 'a>;

fn drive(p: &ProblemSpec, sm: Option<&Smooth>, step: Stepper<'_>, tol: f64) -> Result<(Vector, Vector)> {
    let mut st = SolverState::zeros(p);
    let mut next_check = 5usize;
    for k in 1..=MAX_OUTER {
        st = step(&st)?;
        if !st.is_finite() {
            break;
        }
        if k == next_check || k == MAX_OUTER {
            next_check += (next_check / 4).max(5);
            if let Some(sol) = try_polish(p, sm, &st.x, &st.lambda, tol) {
                return Ok(sol);
            }
        }
    }
    Err(Error::OracleFailure {
        message: format!("no KKT point within {tol:e} after {MAX_OUTER} iterations"),
        candidates: vec![st.x],
    })
}

fn inner() -> InnerPolicy {
    InnerPolicy {
        eps: EpsSchedule::Summable { eps0: None },
        max_iter: 20_000,
    }
}

/// Reference solution whose KKT residual is at most `tol`.
///
/// A reference already attached to `p` is verified and returned; a planted
/// `x*` without multipliers gets them from the computed solution.
pub fn compute_reference_oracle(p: &ProblemSpec, tol: f64) -> Result<ReferenceSolution> {
    if !(tol > 0.0 && tol <= 1e-10) {
        return Err(Error::arg(format!("oracle tolerance must lie in (0, 1e-10], got {tol:e}")));
    }
    if let Some(r) = p.reference() {
        if let Some(l) = &r.lambda_star {
            if certified(p, &r.x_star, l, tol) {
                return Ok(r.clone());
            }
        }
    }
    let planted = p.reference().cloned();
    let mut q = p.clone();
    q.set_reference(None);
    let sm = smooth_part(&q);

    let lg = q.lipschitz_g().max(1.0);
    let an = q.a_norm_sq().max(f64::MIN_POSITIVE);
    let alg = AlgParams {
        alpha: 10.0,
        s: lg / an,
        metric: MetricSchedule::Constant(Metric::scaled_identity(lg)?),
        inner: inner(),
        max_outer: MAX_OUTER,
        stop: StopRule::MaxIterOnly,
        ..AlgParams::default()
    };
    let alm = AlmParams {
        sigma: lg / an,
        proximal: Metric::scaled_identity(lg)?,
        inner: inner(),
        max_outer: MAX_OUTER,
        stop: StopRule::MaxIterOnly,
    };
    let (xa, la) = drive(&q, sm.as_ref(), Box::new(|s| ippd_step(&q, &alg, s).map(|r| r.0)), tol)?;
    let (xb, _) = drive(&q, sm.as_ref(), Box::new(|s| prox_alm_step(&q, &alm, s).map(|r| r.0)), tol)?;
    let gap = (&xa - &xb).norm();
    if gap > ORACLE_AGREEMENT * (1.0 + xa.norm()) {
        return Err(Error::OracleFailure {
            message: format!("candidate solutions differ by {gap:e}"),
            candidates: vec![xa, xb],
        });
    }

    if let Some(r) = planted {
        if (&r.x_star - &xa).norm() <= ORACLE_AGREEMENT * (1.0 + xa.norm()) {
            if let Some((x, l)) = try_polish(&q, sm.as_ref(), &r.x_star, &la, tol) {
                return Ok(ReferenceSolution {
                    f_star: q.objective(&x),
                    x_star: x,
                    lambda_star: Some(l),
                    provenance: r.provenance,
                });
            }
        }
    }
    Ok(ReferenceSolution {
        f_star: q.objective(&xa),
        x_star: xa,
        lambda_star: Some(la),
        provenance: Provenance::OracleComputed,
    })
}

/// `p` with its reference replaced by the oracle's.
pub fn with_oracle_reference(mut p: ProblemSpec, tol: f64) -> Result<ProblemSpec> {
    let r = compute_reference_oracle(&p, tol)?;
    p.set_reference(Some(r));
    Ok(p)
}
