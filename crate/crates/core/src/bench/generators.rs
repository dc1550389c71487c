//! Seeded instance generators. Every draw goes through one ChaCha stream per
//! instance, so identical arguments give byte-identical problems.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::function::FunctionDescriptor;
use crate::linalg::{gaussian_matrix, gaussian_vector, seeded_rng};
use crate::metric::Metric;
use crate::problem::{ProblemSpec, Provenance, ReferenceSolution};
use crate::{Matrix, Vector};

/// `min ½xᵀQx + qᵀx` over `x ≥ 0, Ax = b` with `A = [B | I]`, `Q = 2HᵀH`.
/// No reference is attached; see [`super::with_oracle_reference`].
pub fn gen_nlcqp(m: usize, n: usize, seed: u64) -> Result<ProblemSpec> {
    if m == 0 || m >= n {
        return Err(Error::arg(format!("nlcqp needs 0 < m < n, got m={m}, n={n}")));
    }
    let mut rng = seeded_rng(seed);
    let q = gaussian_vector(&mut rng, n);
    let b = Vector::from_fn(m, |_, _| rng.random::<f64>());
    let bb = gaussian_matrix(&mut rng, m, n - m);
    let h = gaussian_matrix(&mut rng, n, n);

    let mut a = Matrix::zeros(m, n);
    a.view_mut((0, 0), (m, n - m)).copy_from(&bb);
    for i in 0..m {
        a[(i, n - m + i)] = 1.0;
    }
    let mut qm = h.tr_mul(&h) * 2.0;
    // entry (i, j) and (j, i) come from different summation orders
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (qm[(i, j)] + qm[(j, i)]);
            qm[(i, j)] = v;
            qm[(j, i)] = v;
        }
    }
    let g = FunctionDescriptor::quadratic(Metric::dense(qm)?, q)?;
    ProblemSpec::new(FunctionDescriptor::nonneg_indicator(), Some(g), a, b)
}

/// Noiseless basis pursuit `min ‖x‖₁ s.t. Ax = b` with a planted sparse `x*`
/// of `round(0.1·n)` nonzeros uniform on `[−2, 2]`.
pub fn gen_basis_pursuit(m: usize, n: usize, seed: u64) -> Result<ProblemSpec> {
    gen_basis_pursuit_with(m, n, seed, ((0.1 * n as f64).round() as usize).max(1))
}

pub fn gen_basis_pursuit_with(m: usize, n: usize, seed: u64, nnz: usize) -> Result<ProblemSpec> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("basis pursuit needs 0 < m <= n, got m={m}, n={n}")));
    }
    check_nnz(nnz, n)?;
    let mut rng = seeded_rng(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let mut support = sample(&mut rng, n, nnz).into_vec();
    support.sort_unstable();
    let mut x = Vector::zeros(n);
    for &i in &support {
        x[i] = rng.random_range(-2.0..=2.0);
    }
    let b = &a * &x;
    let p = ProblemSpec::new(FunctionDescriptor::l1(), None, a, b)?;
    let f_star = x.abs().sum();
    p.with_reference(ReferenceSolution {
        x_star: x,
        f_star,
        lambda_star: None,
        provenance: Provenance::Planted,
    })
}

fn check_nnz(nnz: usize, n: usize) -> Result<()> {
    if nnz == 0 || nnz > n {
        return Err(Error::arg(format!("planted nonzeros must lie in 1..={n}, got {nnz}")));
    }
    Ok(())
}

/// Number of planted nonzeros for the ℓ1-ℓ2 family.
pub fn l1l2_nonzeros(n: usize) -> usize {
    if n == 3000 {
        150
    } else {
        ((0.05 * n as f64).round() as usize).max(1)
    }
}

/// `min ‖x‖₁ + (β/2)‖x‖² s.t. Ax = b`, `b = Ax* + ω`, `‖ω‖ = noise_norm`.
///
/// Split as `f = ‖·‖₁`, `g = (β/2)‖·‖²`. The attached reference is the planted
/// signal, which is not the minimizer of the regularized program.
pub fn gen_l1l2(m: usize, n: usize, seed: u64, beta: f64, noise_norm: f64) -> Result<ProblemSpec> {
    gen_l1l2_with(m, n, seed, beta, noise_norm, l1l2_nonzeros(n))
}

pub fn gen_l1l2_with(m: usize, n: usize, seed: u64, beta: f64, noise_norm: f64, nnz: usize) -> Result<ProblemSpec> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("l1l2 needs 0 < m <= n, got m={m}, n={n}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::arg(format!("beta must be positive, got {beta}")));
    }
    if !(noise_norm >= 0.0) || !noise_norm.is_finite() {
        return Err(Error::arg(format!("noise norm must be >= 0, got {noise_norm}")));
    }
    check_nnz(nnz, n)?;
    let mut rng = seeded_rng(seed);
    let a = gaussian_matrix(&mut rng, m, n);
    let mut support = sample(&mut rng, n, nnz).into_vec();
    support.sort_unstable();
    let normal = Normal::new(0.0, 2.0).expect("valid normal");
    let mut x = Vector::zeros(n);
    for &i in &support {
        x[i] = loop {
            let v: f64 = normal.sample(&mut rng);
            if (-2.0..=2.0).contains(&v) {
                break v;
            }
        };
    }
    let mut b = &a * &x;
    let w = gaussian_vector(&mut rng, m);
    if noise_norm > 0.0 {
        b += &w * (noise_norm / w.norm());
    }
    let g = FunctionDescriptor::quadratic(Metric::ScaledIdentity(beta), Vector::zeros(n))?;
    let f_star = x.abs().sum() + 0.5 * beta * x.norm_squared();
    ProblemSpec::new(FunctionDescriptor::l1(), Some(g), a, b)?.with_reference(ReferenceSolution {
        x_star: x,
        f_star,
        lambda_star: None,
        provenance: Provenance::Planted,
    })
}

/// Equality-constrained quadratic `min ½xᵀQx + qᵀx s.t. Ax = b` with
/// `f = 0`, `Q = CᵀC/n + I/10`. The reference solves the KKT system directly.
pub fn gen_toy(m: usize, n: usize, seed: u64) -> Result<ProblemSpec> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("toy needs 0 < m <= n, got m={m}, n={n}")));
    }
    let mut rng = seeded_rng(seed);
    let c = gaussian_matrix(&mut rng, n, n);
    let mut q_mat = c.tr_mul(&c) / n as f64 + Matrix::identity(n, n) * 0.1;
    q_mat = (&q_mat + q_mat.transpose()) * 0.5;
    let q = gaussian_vector(&mut rng, n);
    let a = gaussian_matrix(&mut rng, m, n);
    let b = gaussian_vector(&mut rng, m);

    let mut kkt = Matrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&q_mat);
    kkt.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(&a);
    let mut rhs = Vector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-&q));
    rhs.rows_mut(n, m).copy_from(&b);
    let lu = kkt.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical {
            message: "toy KKT system is singular".into(),
            condition: f64::INFINITY,
        })?;
    let r = &rhs - &kkt * &sol;
    if let Some(d) = lu.solve(&r) {
        sol += d;
    }
    let x_star = sol.rows(0, n).into_owned();
    let lambda_star = sol.rows(n, m).into_owned();

    let g = FunctionDescriptor::quadratic(Metric::dense(q_mat)?, q)?;
    let p = ProblemSpec::new(FunctionDescriptor::zero(), Some(g), a, b)?;
    let f_star = p.objective(&x_star);
    p.with_reference(ReferenceSolution {
        x_star,
        f_star,
        lambda_star: Some(lambda_star),
        provenance: Provenance::OracleComputed,
    })
}
