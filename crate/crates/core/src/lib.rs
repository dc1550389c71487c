//! Inertial primal-dual methods for linearly constrained convex optimization:
//!
//! ```text
//! min_x  f(x) + g(x)   s.t.  Ax = b
//! ```
//!
//! with `f` prox-friendly and `g` smooth. The crate provides closed-form prox
//! operators, inner subproblem solvers, the inertial primal-dual iteration and
//! its linearized variant, ALM-type baselines, energy certificates and an
//! experiment harness.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod function;
pub mod inner;
pub mod linalg;
pub mod metric;
pub mod problem;
pub mod prox;
pub mod solvers;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub use error::{Error, Result};
pub use function::FunctionDescriptor;
pub use metric::Metric;
pub use problem::{KKTPoint, ProblemSpec, Provenance, ReferenceSolution};
