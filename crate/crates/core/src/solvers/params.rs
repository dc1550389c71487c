//! Parameters for the inertial methods and the ALM baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::problem::ProblemSpec;
use crate::Vector;

/// Rule producing `Mₖ`. A sequence is indexed from `M₀` and repeats its last
/// entry.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSchedule {
    Constant(Metric),
    Sequence(Vec<Metric>),
}

impl Default for MetricSchedule {
    fn default() -> Self {
        MetricSchedule::Constant(Metric::Zero)
    }
}

impl MetricSchedule {
    pub fn at(&self, k: usize) -> &Metric {
        static ZERO: Metric = Metric::Zero;
        match self {
            MetricSchedule::Constant(m) => m,
            MetricSchedule::Sequence(v) => v.get(k).or_else(|| v.last()).unwrap_or(&ZERO),
        }
    }

    /// `Mₖ₋₁ ⪰ Mₖ` wherever the representations make it decidable.
    fn check_nonincreasing(&self) -> Result<()> {
        if let MetricSchedule::Sequence(v) = self {
            for (k, w) in v.windows(2).enumerate() {
                if w[0].dominates(&w[1]) == Some(false) {
                    return Err(Error::arg(format!(
                        "metric schedule increases between k={} and k={}",
                        k,
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn metrics(&self) -> Vec<&Metric> {
        match self {
            MetricSchedule::Constant(m) => vec![m],
            MetricSchedule::Sequence(v) => v.iter().collect(),
        }
    }
}

/// Target inner residual per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsSchedule {
    /// `ε₀ / (k+1)³`; `ε₀` defaults to `1e-2 (1 + ‖b‖)`.
    Summable { eps0: Option<f64> },
    /// The same target at every iteration.
    Fixed(f64),
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::Summable { eps0: None }
    }
}

impl EpsSchedule {
    pub fn eps0(&self, b_norm: f64) -> f64 {
        match self {
            EpsSchedule::Summable { eps0 } => eps0.unwrap_or(1e-2 * (1.0 + b_norm)),
            EpsSchedule::Fixed(t) => *t,
        }
    }

    pub fn target(&self, k: usize, b_norm: f64) -> f64 {
        match self {
            EpsSchedule::Summable { .. } => self.eps0(b_norm) / ((k + 1) as f64).powi(3),
            EpsSchedule::Fixed(t) => *t,
        }
    }

    /// Bound on `Σ_{j>K} j·target(j)`; infinite for a flat schedule.
    pub fn weighted_tail(&self, last_k: usize, b_norm: f64) -> f64 {
        match self {
            // Σ_{j>K} j/(j+1)³ ≤ Σ_{j>K} 1/(j+1)² ≤ 1/(K+1)
            EpsSchedule::Summable { .. } => self.eps0(b_norm) / (last_k + 1) as f64,
            EpsSchedule::Fixed(t) if *t == 0.0 => 0.0,
            EpsSchedule::Fixed(_) => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match self {
            EpsSchedule::Summable { eps0 } => eps0.unwrap_or(1.0),
            EpsSchedule::Fixed(t) => *t,
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::arg(format!("inner tolerance must be finite and >= 0, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerPolicy {
    pub eps: EpsSchedule,
    pub max_iter: usize,
}

impl Default for InnerPolicy {
    fn default() -> Self {
        InnerPolicy {
            eps: EpsSchedule::default(),
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "tol", rename_all = "snake_case")]
pub enum StopRule {
    FeasTol(f64),
    ResPlusRel(f64),
    MaxIterOnly,
}

impl StopRule {
    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        match self {
            StopRule::FeasTol(t) | StopRule::ResPlusRel(t) if !(*t > 0.0) => {
                Err(Error::arg(format!("stop tolerance must be positive, got {t}")))
            }
            StopRule::ResPlusRel(_) if p.reference().is_none() => Err(Error::arg(
                "res_plus_rel stopping needs a reference solution",
            )),
            _ => Ok(()),
        }
    }
}

/// Deterministic perturbation `εₖ = scale · direction / (k+1)^power` added to
/// the linearized subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedEps {
    pub direction: Vector,
    pub scale: f64,
    pub power: f64,
}

impl InjectedEps {
    pub fn at(&self, k: usize) -> Vector {
        &self.direction * (self.scale / ((k + 1) as f64).powf(self.power))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgParams {
    pub alpha: f64,
    pub s: f64,
    pub metric: MetricSchedule,
    pub inner: InnerPolicy,
    pub max_outer: usize,
    pub stop: StopRule,
    pub injected_eps: Option<InjectedEps>,
    /// Require `Mₖ ⪰ s·L_g·I` for the linearized method.
    pub enforce_metric_floor: bool,
}

impl Default for AlgParams {
    fn default() -> Self {
        AlgParams {
            alpha: 3.0,
            s: 1.0,
            metric: MetricSchedule::default(),
            inner: InnerPolicy::default(),
            max_outer: 1000,
            stop: StopRule::MaxIterOnly,
            injected_eps: None,
            enforce_metric_floor: true,
        }
    }
}

impl AlgParams {
    /// Defaults for the linearized method: `M = s·L_g·I`.
    pub fn linearized_defaults(p: &ProblemSpec) -> Self {
        let s = 1.0;
        AlgParams {
            s,
            metric: MetricSchedule::Constant(Metric::scaled_identity(s * p.lipschitz_g()).unwrap_or_default()),
            ..AlgParams::default()
        }
    }

    pub fn validate(&self, p: &ProblemSpec, linearized: bool) -> Result<()> {
        if !(self.alpha >= 3.0) || !self.alpha.is_finite() {
            return Err(Error::arg(format!("alpha must be >= 3, got {}", self.alpha)));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::arg(format!("s must be positive, got {}", self.s)));
        }
        for m in self.metric.metrics() {
            m.check_dim(p.n())?;
        }
        self.metric.check_nonincreasing()?;
        self.inner.eps.validate()?;
        self.stop.validate(p)?;
        if let Some(inj) = &self.injected_eps {
            crate::error::check_len("injected ε direction", p.n(), inj.direction.len())?;
        }
        if linearized && self.enforce_metric_floor {
            let floor = Metric::scaled_identity(self.s * p.lipschitz_g())?;
            for m in self.metric.metrics() {
                if m.dominates(&floor) == Some(false) {
                    return Err(Error::arg(format!(
                        "metric must dominate s·L_g·I = {:.6e}·I",
                        self.s * p.lipschitz_g()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Proximal ALM: penalty `σ` and proximal metric `P` (`P = 0` is plain ALM).
#[derive(Debug, Clone, PartialEq)]
pub struct AlmParams {
    pub sigma: f64,
    pub proximal: Metric,
    pub inner: InnerPolicy,
    pub max_outer: usize,
    pub stop: StopRule,
}

impl Default for AlmParams {
    fn default() -> Self {
        AlmParams {
            sigma: 1.0,
            proximal: Metric::Zero,
            inner: InnerPolicy::default(),
            max_outer: 1000,
            stop: StopRule::MaxIterOnly,
        }
    }
}

impl AlmParams {
    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::arg(format!("sigma must be positive, got {}", self.sigma)));
        }
        self.proximal.check_dim(p.n())?;
        self.inner.eps.validate()?;
        self.stop.validate(p)
    }
}

/// Accelerated linearized ALM with `αₖ = 2/(k+1)`, `βₖ = γₖ = penalty·k`,
/// `Pₖ = (prox_scale/k)·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AalmParams {
    pub penalty: f64,
    pub prox_scale: f64,
    pub inner: InnerPolicy,
    pub max_outer: usize,
    pub stop: StopRule,
}

impl AalmParams {
    /// `βₖ = γₖ = L_g·k`, `Pₖ = (2L_g/k)·I`.
    pub fn defaults_for(p: &ProblemSpec) -> Self {
        let l = p.lipschitz_g().max(f64::MIN_POSITIVE);
        AalmParams {
            penalty: l,
            prox_scale: 2.0 * l,
            inner: InnerPolicy::default(),
            max_outer: 1000,
            stop: StopRule::MaxIterOnly,
        }
    }

    pub fn weight(k: usize) -> f64 {
        2.0 / (k as f64 + 1.0)
    }

    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        if !(self.penalty > 0.0) || !(self.prox_scale >= 0.0) {
            return Err(Error::arg("aalm needs penalty > 0 and prox_scale >= 0"));
        }
        if p.g().is_none() {
            return Err(Error::capability("aalm linearizes g; the problem has none"));
        }
        self.inner.eps.validate()?;
        self.stop.validate(p)
    }
}
