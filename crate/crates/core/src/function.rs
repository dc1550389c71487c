//! Convex function descriptors with capability flags.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::metric::Metric;
use crate::Vector;

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;

/// User-supplied function. Each capability must come with its own rule.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub value: ValueFn,
    pub gradient: Option<GradientFn>,
    pub prox: Option<ProxFn>,
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunction")
            .field("name", &self.name)
            .field("gradient", &self.gradient.is_some())
            .field("prox", &self.prox.is_some())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum FunctionKind {
    Zero,
    L1,
    NonnegIndicator,
    /// `‖x‖₁ + (β/2)‖x‖²`
    L1PlusScaledSq { beta: f64 },
    /// `½ xᵀQx + qᵀx`
    Quadratic { hessian: Metric, linear: Vector },
    Custom(CustomFunction),
}

#[derive(Debug, Clone)]
pub struct FunctionDescriptor {
    kind: FunctionKind,
}

impl FunctionDescriptor {
    pub fn zero() -> Self {
        Self {
            kind: FunctionKind::Zero,
        }
    }

    pub fn l1() -> Self {
        Self {
            kind: FunctionKind::L1,
        }
    }

    pub fn nonneg_indicator() -> Self {
        Self {
            kind: FunctionKind::NonnegIndicator,
        }
    }

    pub fn l1_plus_scaled_sq(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::arg(format!("l1_plus_scaled_sq needs beta > 0, got {beta}")));
        }
        Ok(Self {
            kind: FunctionKind::L1PlusScaledSq { beta },
        })
    }

    /// `½ xᵀQx + qᵀx`. Symmetry and PSD-ness are checked by [`Metric`].
    pub fn quadratic(hessian: Metric, linear: Vector) -> Result<Self> {
        hessian.check_dim(linear.len())?;
        Ok(Self {
            kind: FunctionKind::Quadratic { hessian, linear },
        })
    }

    pub fn custom(custom: CustomFunction) -> Result<Self> {
        if let Some(l) = custom.lipschitz {
            if !(l >= 0.0) {
                return Err(Error::arg("custom lipschitz constant must be nonnegative"));
            }
        }
        Ok(Self {
            kind: FunctionKind::Custom(custom),
        })
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Zero => "zero",
            FunctionKind::L1 => "l1",
            FunctionKind::NonnegIndicator => "nonneg_indicator",
            FunctionKind::L1PlusScaledSq { .. } => "l1_plus_scaled_sq",
            FunctionKind::Quadratic { .. } => "quadratic",
            FunctionKind::Custom(_) => "custom",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FunctionKind::Zero)
    }

    pub fn has_prox(&self) -> bool {
        match &self.kind {
            FunctionKind::Custom(c) => c.prox.is_some(),
            _ => true,
        }
    }

    pub fn has_gradient(&self) -> bool {
        match &self.kind {
            FunctionKind::Zero | FunctionKind::Quadratic { .. } => true,
            FunctionKind::Custom(c) => c.gradient.is_some(),
            _ => false,
        }
    }

    /// Lipschitz constant of the gradient, when the function is smooth.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match &self.kind {
            FunctionKind::Zero => Some(0.0),
            FunctionKind::Quadratic { hessian, .. } => Some(hessian.lambda_max()),
            FunctionKind::Custom(c) if c.gradient.is_some() => c.lipschitz,
            _ => None,
        }
    }

    /// Dimension fixed by the descriptor's data, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            FunctionKind::Quadratic { linear, .. } => Some(linear.len()),
            _ => None,
        }
    }

    /// Function value; `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &Vector) -> f64 {
        match &self.kind {
            FunctionKind::Zero => 0.0,
            FunctionKind::L1 => x.lp_norm(1),
            FunctionKind::NonnegIndicator => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionKind::L1PlusScaledSq { beta } => x.lp_norm(1) + 0.5 * beta * x.norm_squared(),
            FunctionKind::Quadratic { hessian, linear } => {
                0.5 * hessian.seminorm_sq_unchecked(x) + linear.dot(x)
            }
            FunctionKind::Custom(c) => (c.value)(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        match &self.kind {
            FunctionKind::Zero => Ok(Vector::zeros(x.len())),
            FunctionKind::Quadratic { hessian, linear } => {
                check_len("quadratic gradient", linear.len(), x.len())?;
                Ok(hessian.apply(x) + linear)
            }
            FunctionKind::Custom(CustomFunction {
                gradient: Some(g), ..
            }) => Ok(g(x)),
            _ => Err(Error::capability(format!(
                "{} has no gradient",
                self.kind_name()
            ))),
        }
    }

    /// Hessian and linear term of an explicit quadratic.
    pub fn as_quadratic(&self) -> Option<(&Metric, &Vector)> {
        match &self.kind {
            FunctionKind::Quadratic { hessian, linear } => Some((hessian, linear)),
            _ => None,
        }
    }
}
