use crate::error::{check_len, Result};
use crate::problem::ProblemSpec;
use crate::Vector;

/// Iterate bundle `(k, xₖ, xₖ₋₁, λₖ, λₖ₋₁)` with `Axₖ` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vector,
    pub x_prev: Vector,
    pub lambda: Vector,
    pub lambda_prev: Vector,
    pub ax: Vector,
}

/// Quantities derived from a state at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub x_bar: Vector,
    pub lambda_bar: Vector,
    pub x_hat: Vector,
    pub lambda_hat: Vector,
    pub eta: Vector,
}

impl SolverState {
    /// `k = 1` with `x₁ = x₀`, `λ₁ = λ₀`.
    pub fn new(p: &ProblemSpec, x0: Vector, lambda0: Vector) -> Result<Self> {
        check_len("x₀", p.n(), x0.len())?;
        check_len("λ₀", p.m(), lambda0.len())?;
        Ok(SolverState {
            k: 1,
            ax: p.a() * &x0,
            x_prev: x0.clone(),
            x: x0,
            lambda_prev: lambda0.clone(),
            lambda: lambda0,
        })
    }

    pub fn zeros(p: &ProblemSpec) -> Self {
        SolverState::new(p, Vector::zeros(p.n()), Vector::zeros(p.m())).expect("dimensions match")
    }

    pub fn derive(&self, alpha: f64, b: &Vector) -> Derived {
        let k = self.k;
        let x_bar = super::extrapolate(k, alpha, &self.x, &self.x_prev);
        let lambda_bar = super::extrapolate(k, alpha, &self.lambda, &self.lambda_prev);
        Derived {
            x_hat: super::dual_anchor(k, alpha, &x_bar, &self.x),
            lambda_hat: super::dual_anchor(k, alpha, &lambda_bar, &self.lambda),
            eta: super::eta_from_image(k, alpha, &self.ax, b),
            x_bar,
            lambda_bar,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.lambda.iter()).all(|v| v.is_finite())
    }
}

/// State of the accelerated linearized ALM: `(k, xₖ, x̄ₖ, λₖ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AalmState {
    pub k: usize,
    pub x: Vector,
    pub x_bar: Vector,
    pub lambda: Vector,
}

impl AalmState {
    pub fn new(p: &ProblemSpec, x0: Vector, lambda0: Vector) -> Result<Self> {
        check_len("x₀", p.n(), x0.len())?;
        check_len("λ₀", p.m(), lambda0.len())?;
        Ok(AalmState {
            k: 1,
            x_bar: x0.clone(),
            x: x0,
            lambda: lambda0,
        })
    }
}

/// Vectors of one inertial step `k → k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepVectors {
    pub k: usize,
    pub x: Vector,
    pub lambda: Vector,
    pub derived: Derived,
    /// Realized perturbation `εₖ` (zero for exact methods).
    pub eps: Vector,
    pub x_next: Vector,
    pub lambda_next: Vector,
}
