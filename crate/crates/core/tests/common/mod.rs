#![allow(dead_code)]

use ipd_core::bench::{gen_basis_pursuit, gen_l1l2, gen_nlcqp, gen_toy};
use ipd_core::function::FunctionKind;
use ipd_core::linalg::{gaussian_matrix, gaussian_vector, seeded_rng};
use ipd_core::prox::prox_dispatch;
use ipd_core::{FunctionDescriptor, Matrix, Metric, ProblemSpec, Vector};
use rand::Rng;

/// Minimizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force `prox_{t f}(v)`: golden section per coordinate for separable
/// kinds, cyclic golden-section coordinate descent for quadratics.
pub fn brute_prox(d: &FunctionDescriptor, v: &Vector, t: f64) -> Vector {
    let width = 2.0 * (v.amax() + 10.0 * t + 10.0);
    let scalar = |phi: &dyn Fn(f64) -> f64, vi: f64| golden_min(|x| t * phi(x) + 0.5 * (x - vi).powi(2), vi - width, vi + width);
    match d.kind() {
        FunctionKind::Zero => v.clone(),
        FunctionKind::L1 => v.map(|vi| scalar(&|x: f64| x.abs(), vi)),
        FunctionKind::L1PlusScaledSq { beta } => {
            let b = *beta;
            v.map(|vi| scalar(&|x: f64| x.abs() + 0.5 * b * x * x, vi))
        }
        FunctionKind::NonnegIndicator => {
            v.map(|vi| golden_min(|x| 0.5 * (x - vi).powi(2), 0.0, vi.abs() + 1.0))
        }
        FunctionKind::Quadratic { hessian, linear } => {
            let n = v.len();
            let q = hessian.to_dense(n);
            let obj_coord = |x: &Vector, i: usize, xi: f64| {
                let mut y = x.clone();
                y[i] = xi;
                t * (0.5 * y.dot(&(&q * &y)) + linear.dot(&y)) + 0.5 * (&y - v).norm_squared()
            };
            let mut x = v.clone();
            for _ in 0..400 {
                let before = x.clone();
                for i in 0..n {
                    let xi = golden_min(|s| obj_coord(&x, i, s), x[i] - width, x[i] + width);
                    x[i] = xi;
                }
                if (&x - &before).amax() <= 1e-15 * (1.0 + x.amax()) {
                    break;
                }
            }
            x
        }
        FunctionKind::Custom(_) => panic!("no brute-force oracle for custom functions"),
    }
}

/// Worst violation of `(v − p)/t ∈ ∂f(p)`.
pub fn membership_violation(d: &FunctionDescriptor, v: &Vector, p: &Vector, t: f64) -> f64 {
    let u = (v - p) / t;
    let mut worst: f64 = 0.0;
    let sub_abs = |ui: f64, pi: f64| if pi != 0.0 { (ui - pi.signum()).abs() } else { (ui.abs() - 1.0).max(0.0) };
    match d.kind() {
        FunctionKind::Zero => worst = u.amax(),
        FunctionKind::L1 => {
            for i in 0..p.len() {
                worst = worst.max(sub_abs(u[i], p[i]));
            }
        }
        FunctionKind::L1PlusScaledSq { beta } => {
            for i in 0..p.len() {
                worst = worst.max(sub_abs(u[i] - beta * p[i], p[i]));
            }
        }
        FunctionKind::NonnegIndicator => {
            // normal cone of the orthant: u ≤ 0, u = 0 where p > 0, p ≥ 0
            for i in 0..p.len() {
                let w = if p[i] > 0.0 { u[i].abs() } else { u[i].max(0.0) };
                worst = worst.max(w).max((-p[i]).max(0.0));
            }
        }
        FunctionKind::Quadratic { hessian, linear } => {
            let g = hessian.apply(p) + linear;
            worst = (u - &g).amax() / (1.0 + g.amax());
        }
        FunctionKind::Custom(_) => panic!("no membership check for custom functions"),
    }
    worst
}

pub struct ProxCase {
    pub f: FunctionDescriptor,
    pub v: Vector,
    pub t: f64,
}

/// 100 seeded cases cycling through every closed-form kind.
pub fn prox_cases(seed: u64) -> Vec<ProxCase> {
    let mut rng = seeded_rng(seed);
    (0..100)
        .map(|i| {
            let n = rng.random_range(1..=5);
            let v = Vector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let t = rng.random_range(0.01..3.0);
            let f = match i % 6 {
                0 => FunctionDescriptor::zero(),
                1 => FunctionDescriptor::l1(),
                2 => FunctionDescriptor::nonneg_indicator(),
                3 => FunctionDescriptor::l1_plus_scaled_sq(rng.random_range(0.05..4.0)).unwrap(),
                4 => {
                    let d = Vector::from_fn(n, |_, _| rng.random_range(0.0..3.0));
                    let q = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                    FunctionDescriptor::quadratic(Metric::diagonal(d).unwrap(), q).unwrap()
                }
                _ => {
                    let c = gaussian_matrix(&mut rng, n, n);
                    let q = gaussian_vector(&mut rng, n);
                    let h = c.transpose() * c / n as f64;
                    let h = (&h + h.transpose()) * 0.5;
                    FunctionDescriptor::quadratic(Metric::dense(h).unwrap(), q).unwrap()
                }
            };
            ProxCase { f, v, t }
        })
        .collect()
}

pub struct ProxSuite {
    pub max_error: f64,
    pub max_violation: f64,
}

pub fn run_prox_suite(seed: u64) -> ProxSuite {
    let mut out = ProxSuite { max_error: 0.0, max_violation: 0.0 };
    for c in prox_cases(seed) {
        let p = prox_dispatch(&c.f, &c.v, c.t).unwrap();
        let brute = brute_prox(&c.f, &c.v, c.t);
        out.max_error = out.max_error.max((&p - &brute).amax());
        out.max_violation = out.max_violation.max(membership_violation(&c.f, &c.v, &p, c.t));
    }
    out
}

/// Strictly convex QP on a scaled simplex: `n = 3`, `m = 1`, `x ≥ 0`.
pub fn tiny_qp(seed: u64) -> ProblemSpec {
    let mut rng = seeded_rng(seed);
    let c = gaussian_matrix(&mut rng, 3, 3);
    let mut h = c.transpose() * &c;
    for i in 0..3 {
        h[(i, i)] += 0.1;
    }
    let h = (&h + h.transpose()) * 0.5;
    let q = gaussian_vector(&mut rng, 3) * 2.0;
    let a = Matrix::from_fn(1, 3, |_, _| rng.random_range(0.5..2.0));
    let b = Vector::from_element(1, rng.random_range(0.5..2.0));
    let g = FunctionDescriptor::quadratic(Metric::dense(h).unwrap(), q).unwrap();
    ProblemSpec::new(FunctionDescriptor::nonneg_indicator(), Some(g), a, b).unwrap()
}

/// KKT point of `min ½xᵀHx + qᵀx s.t. Ax = b, x ≥ 0` by enumerating the
/// `2ⁿ` free/fixed patterns.
pub fn enumerate_active_sets(h: &Matrix, q: &Vector, a: &Matrix, b: &Vector) -> (Vector, Vector) {
    let (m, n) = a.shape();
    let mut best: Option<(f64, Vector, Vector)> = None;
    for mask in 1u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let nf = free.len();
        let mut kkt = Matrix::zeros(nf + m, nf + m);
        let mut rhs = Vector::zeros(nf + m);
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kkt[(r, c)] = h[(i, j)];
            }
            for l in 0..m {
                kkt[(r, nf + l)] = a[(l, i)];
                kkt[(nf + l, r)] = a[(l, i)];
            }
            rhs[r] = -q[i];
        }
        for l in 0..m {
            rhs[nf + l] = b[l];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let mut x = Vector::zeros(n);
        for (r, &i) in free.iter().enumerate() {
            x[i] = sol[r];
        }
        let lambda = sol.rows(nf, m).into_owned();
        let mu = h * &x + q + a.transpose() * &lambda;
        let primal_ok = x.iter().all(|&v| v >= -1e-12);
        let dual_ok = (0..n).filter(|i| !free.contains(i)).all(|i| mu[i] >= -1e-12);
        if primal_ok && dual_ok {
            let val = 0.5 * x.dot(&(h * &x)) + q.dot(&x);
            if best.as_ref().is_none_or(|(v, _, _)| val < *v) {
                best = Some((val, x, lambda));
            }
        }
    }
    let (_, x, lambda) = best.expect("some pattern is a KKT point");
    (x, lambda)
}

/// Small instances of every family, `n ≤ 50`, `m ≤ 10`.
pub fn desk_instances() -> Vec<ProblemSpec> {
    vec![
        gen_toy(5, 20, 1).unwrap(),
        gen_toy(3, 12, 2).unwrap(),
        gen_toy(10, 50, 3).unwrap(),
        gen_nlcqp(5, 20, 4).unwrap(),
        gen_nlcqp(10, 50, 5).unwrap(),
        gen_basis_pursuit(10, 30, 6).unwrap(),
        gen_basis_pursuit(8, 40, 7).unwrap(),
        gen_l1l2(10, 40, 8, 0.5, 1e-3).unwrap(),
        gen_l1l2(6, 25, 9, 2.0, 0.0).unwrap(),
        gen_toy(1, 5, 10).unwrap(),
    ]
}

/// Minimum-norm feasible point `A⁺b`.
pub fn feasible_point(p: &ProblemSpec) -> Vector {
    p.a().clone().svd(true, true).solve(p.b(), 1e-12).unwrap()
}
