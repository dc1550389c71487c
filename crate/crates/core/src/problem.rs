//! The constrained problem `min f(x) + g(x)  s.t.  Ax = b`, its Lagrangian and
//! KKT residuals.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::function::{FunctionDescriptor, FunctionKind};
use crate::linalg::{gaussian_vector, seeded_rng, spectral_norm_estimate};
use crate::metric::Metric;
use crate::prox::prox_dispatch;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Planted,
    OracleComputed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    pub f_star: f64,
    pub lambda_star: Option<Vector>,
    pub provenance: Provenance,
}

/// A primal-dual pair `(x*, λ*)` with `−Aᵀλ* ∈ ∂F(x*)` and `Ax* = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct KKTPoint {
    pub x_star: Vector,
    pub lambda_star: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub stationarity: f64,
    pub feasibility: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.feasibility)
    }
}

#[derive(Debug)]
pub struct ProblemSpec {
    f: FunctionDescriptor,
    g: Option<FunctionDescriptor>,
    a: Matrix,
    b: Vector,
    reference: Option<ReferenceSolution>,
    a_norm_sq: OnceLock<f64>,
    gram: OnceLock<Matrix>,
}

impl Clone for ProblemSpec {
    fn clone(&self) -> Self {
        let a_norm_sq = OnceLock::new();
        if let Some(v) = self.a_norm_sq.get() {
            let _ = a_norm_sq.set(*v);
        }
        ProblemSpec {
            f: self.f.clone(),
            g: self.g.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            reference: self.reference.clone(),
            a_norm_sq,
            gram: self.gram.clone(),
        }
    }
}

const LIPSCHITZ_PROBES: usize = 8;
const LIPSCHITZ_PROBE_SEED: u64 = 0x11b5_c4ec;

impl ProblemSpec {
    pub fn new(
        f: FunctionDescriptor,
        g: Option<FunctionDescriptor>,
        a: Matrix,
        b: Vector,
    ) -> Result<Self> {
        check_len("rows of A vs length of b", a.nrows(), b.len())?;
        let n = a.ncols();
        if let Some(d) = f.dim() {
            check_len("dimension of f", n, d)?;
        }
        if let Some(g) = &g {
            if let Some(d) = g.dim() {
                check_len("dimension of g", n, d)?;
            }
            if !g.has_gradient() {
                return Err(Error::capability(format!(
                    "smooth part g ({}) must provide a gradient",
                    g.kind_name()
                )));
            }
            if g.lipschitz_constant().is_none() {
                return Err(Error::capability("smooth part g must declare a Lipschitz constant"));
            }
        }
        let p = ProblemSpec {
            f,
            g,
            a,
            b,
            reference: None,
            a_norm_sq: OnceLock::new(),
            gram: OnceLock::new(),
        };
        if matches!(p.g.as_ref().map(|g| g.kind()), Some(FunctionKind::Custom(_))) {
            p.check_lipschitz(LIPSCHITZ_PROBE_SEED, LIPSCHITZ_PROBES)?;
        }
        Ok(p)
    }

    pub fn with_reference(mut self, reference: ReferenceSolution) -> Result<Self> {
        check_len("reference x*", self.n(), reference.x_star.len())?;
        if let Some(l) = &reference.lambda_star {
            check_len("reference λ*", self.m(), l.len())?;
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn set_reference(&mut self, reference: Option<ReferenceSolution>) {
        self.reference = reference;
    }

    pub fn f(&self) -> &FunctionDescriptor {
        &self.f
    }

    pub fn g(&self) -> Option<&FunctionDescriptor> {
        self.g.as_ref()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn reference(&self) -> Option<&ReferenceSolution> {
        self.reference.as_ref()
    }

    /// `(x*, λ*)` when the reference carries a multiplier.
    pub fn kkt_point(&self) -> Option<KKTPoint> {
        let r = self.reference.as_ref()?;
        Some(KKTPoint {
            x_star: r.x_star.clone(),
            lambda_star: r.lambda_star.clone()?,
        })
    }

    /// Lipschitz constant of ∇g; zero when g is absent.
    pub fn lipschitz_g(&self) -> f64 {
        self.g
            .as_ref()
            .and_then(|g| g.lipschitz_constant())
            .unwrap_or(0.0)
    }

    /// Upper estimate of `‖A‖²`, computed once.
    pub fn a_norm_sq(&self) -> f64 {
        *self.a_norm_sq.get_or_init(|| {
            let s = spectral_norm_estimate(&self.a, 1e-10).unwrap_or(0.0);
            s * s * (1.0 + 1e-8)
        })
    }

    /// `AᵀA`, computed once.
    pub fn gram(&self) -> &Matrix {
        self.gram.get_or_init(|| self.a.tr_mul(&self.a))
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        let gv = self.g.as_ref().map_or(0.0, |g| g.value(x));
        self.f.value(x) + gv
    }

    pub fn residual(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }

    pub fn feasibility(&self, x: &Vector) -> f64 {
        self.residual(x).norm()
    }

    pub fn grad_g(&self, x: &Vector) -> Result<Vector> {
        match &self.g {
            Some(g) => g.gradient(x),
            None => Ok(Vector::zeros(x.len())),
        }
    }

    /// `𝓛(x, λ) = F(x) + ⟨λ, Ax − b⟩`.
    pub fn lagrangian(&self, x: &Vector, lambda: &Vector) -> Result<f64> {
        check_len("lagrangian x", self.n(), x.len())?;
        check_len("lagrangian λ", self.m(), lambda.len())?;
        let obj = self.objective(x);
        if obj.is_infinite() {
            return Ok(obj);
        }
        Ok(obj + lambda.dot(&self.residual(x)))
    }

    pub fn default_kkt_step(&self) -> f64 {
        1.0 / self.lipschitz_g().max(1.0)
    }

    /// Prox-gradient fixed-point residual of `(x, λ)`.
    ///
    /// stationarity = ‖x − prox_{t f}(x − t(∇g(x) + Aᵀλ))‖ / t,
    /// feasibility = ‖Ax − b‖. `t` defaults to `1 / max(1, L_g)`.
    pub fn kkt_residual(&self, x: &Vector, lambda: &Vector, t: Option<f64>) -> Result<KktResidual> {
        check_len("kkt x", self.n(), x.len())?;
        check_len("kkt λ", self.m(), lambda.len())?;
        let t = t.unwrap_or_else(|| self.default_kkt_step());
        if !(t > 0.0) {
            return Err(Error::arg(format!("kkt step must be positive, got {t}")));
        }
        if !self.f.has_prox() {
            return Err(Error::capability("kkt_residual requires f with a prox rule"));
        }
        let grad = self.grad_g(x)? + self.a.tr_mul(lambda);
        let p = prox_dispatch(&self.f, &(x - grad * t), t)?;
        Ok(KktResidual {
            stationarity: (x - p).norm() / t,
            feasibility: self.feasibility(x),
        })
    }

    /// Finite-difference check of the declared Lipschitz constant of ∇g:
    /// `‖∇g(x) − ∇g(y)‖ ≤ (1 + 1e-6) L_g ‖x − y‖` on seeded probe pairs.
    pub fn check_lipschitz(&self, seed: u64, probes: usize) -> Result<()> {
        let Some(g) = &self.g else { return Ok(()) };
        let lg = self.lipschitz_g();
        let mut rng = seeded_rng(seed);
        for _ in 0..probes {
            let x = gaussian_vector(&mut rng, self.n());
            let y = gaussian_vector(&mut rng, self.n());
            let lhs = (g.gradient(&x)? - g.gradient(&y)?).norm();
            let rhs = (1.0 + 1e-6) * lg * (&x - &y).norm();
            if lhs > rhs + 1e-12 {
                return Err(Error::arg(format!(
                    "declared L_g = {lg} violated: ‖∇g(x)−∇g(y)‖ = {lhs:.6e} > {rhs:.6e}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ProblemFile::from_problem(self)?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(s)?;
        file.into_problem()
    }
}

// ---------------------------------------------------------------------------
// JSON problem file
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum HessianJson {
    Dense(Vec<Vec<f64>>),
    Structured(StructuredHessian),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StructuredHessian {
    Zero,
    ScaledIdentity(f64),
    Diagonal(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FunctionJson {
    Zero,
    L1,
    NonnegIndicator,
    L1PlusScaledSq {
        beta: f64,
    },
    Quadratic {
        #[serde(rename = "Q")]
        q_mat: HessianJson,
        q: Vec<f64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ReferenceJson {
    x_star: Vec<f64>,
    #[serde(rename = "F_star")]
    f_star: f64,
    #[serde(default)]
    lambda_star: Option<Vec<f64>>,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    f: FunctionJson,
    #[serde(default)]
    g: Option<FunctionJson>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default)]
    reference: Option<ReferenceJson>,
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    let mut flat = Vec::with_capacity(r * c);
    for row in rows {
        check_len(what, c, row.len())?;
        flat.extend_from_slice(row);
    }
    Ok(Matrix::from_row_slice(r, c, &flat))
}

impl FunctionJson {
    fn from_descriptor(d: &FunctionDescriptor) -> Result<Self> {
        Ok(match d.kind() {
            FunctionKind::Zero => FunctionJson::Zero,
            FunctionKind::L1 => FunctionJson::L1,
            FunctionKind::NonnegIndicator => FunctionJson::NonnegIndicator,
            FunctionKind::L1PlusScaledSq { beta } => FunctionJson::L1PlusScaledSq { beta: *beta },
            FunctionKind::Quadratic { hessian, linear } => FunctionJson::Quadratic {
                q_mat: match hessian {
                    Metric::Zero => HessianJson::Structured(StructuredHessian::Zero),
                    Metric::ScaledIdentity(c) => {
                        HessianJson::Structured(StructuredHessian::ScaledIdentity(*c))
                    }
                    Metric::Diagonal(d) => {
                        HessianJson::Structured(StructuredHessian::Diagonal(d.iter().copied().collect()))
                    }
                    Metric::Dense(dm) => HessianJson::Dense(rows_of(dm.matrix())),
                },
                q: linear.iter().copied().collect(),
            },
            FunctionKind::Custom(c) => {
                return Err(Error::capability(format!(
                    "custom function '{}' cannot be serialized",
                    c.name
                )))
            }
        })
    }

    fn into_descriptor(self) -> Result<FunctionDescriptor> {
        Ok(match self {
            FunctionJson::Zero => FunctionDescriptor::zero(),
            FunctionJson::L1 => FunctionDescriptor::l1(),
            FunctionJson::NonnegIndicator => FunctionDescriptor::nonneg_indicator(),
            FunctionJson::L1PlusScaledSq { beta } => FunctionDescriptor::l1_plus_scaled_sq(beta)?,
            FunctionJson::Quadratic { q_mat, q } => {
                let hessian = match q_mat {
                    HessianJson::Dense(rows) => Metric::dense(matrix_from_rows(&rows, "Q row")?)?,
                    HessianJson::Structured(StructuredHessian::Zero) => Metric::Zero,
                    HessianJson::Structured(StructuredHessian::ScaledIdentity(c)) => {
                        Metric::scaled_identity(c)?
                    }
                    HessianJson::Structured(StructuredHessian::Diagonal(d)) => {
                        Metric::diagonal(Vector::from_vec(d))?
                    }
                };
                FunctionDescriptor::quadratic(hessian, Vector::from_vec(q))?
            }
        })
    }
}

impl ProblemFile {
    fn from_problem(p: &ProblemSpec) -> Result<Self> {
        Ok(ProblemFile {
            f: FunctionJson::from_descriptor(&p.f)?,
            g: p.g.as_ref().map(FunctionJson::from_descriptor).transpose()?,
            a: rows_of(&p.a),
            b: p.b.iter().copied().collect(),
            reference: p.reference.as_ref().map(|r| ReferenceJson {
                x_star: r.x_star.iter().copied().collect(),
                f_star: r.f_star,
                lambda_star: r.lambda_star.as_ref().map(|l| l.iter().copied().collect()),
                provenance: r.provenance,
            }),
        })
    }

    fn into_problem(self) -> Result<ProblemSpec> {
        let a = matrix_from_rows(&self.a, "A row")?;
        let p = ProblemSpec::new(
            self.f.into_descriptor()?,
            self.g.map(FunctionJson::into_descriptor).transpose()?,
            a,
            Vector::from_vec(self.b),
        )?;
        match self.reference {
            Some(r) => p.with_reference(ReferenceSolution {
                x_star: Vector::from_vec(r.x_star),
                f_star: r.f_star,
                lambda_star: r.lambda_star.map(Vector::from_vec),
                provenance: r.provenance,
            }),
            None => Ok(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn l1_example() -> ProblemSpec {
        ProblemSpec::new(
            FunctionDescriptor::l1(),
            None,
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            v(&[1.0]),
        )
        .unwrap()
    }

    #[test]
    fn lagrangian_hand_arithmetic() {
        let p = l1_example();
        assert_eq!(p.lagrangian(&v(&[1.0, 0.0]), &v(&[2.0])).unwrap(), 1.0);
        // feasible point: any multiplier gives F(x)
        assert_eq!(p.lagrangian(&v(&[0.25, 0.75]), &v(&[-9.0])).unwrap(), 1.0);
        assert_eq!(p.lagrangian(&v(&[3.0, 1.0]), &v(&[0.0])).unwrap(), 4.0);
    }

    #[test]
    fn lagrangian_dimension_error() {
        let p = l1_example();
        assert!(matches!(
            p.lagrangian(&v(&[1.0]), &v(&[0.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn lagrangian_is_infinite_off_domain() {
        let p = ProblemSpec::new(
            FunctionDescriptor::nonneg_indicator(),
            None,
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            v(&[1.0]),
        )
        .unwrap();
        assert_eq!(p.lagrangian(&v(&[-1.0, 2.0]), &v(&[1.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kkt_residual_vanishes_at_kkt_point() {
        // min ‖x‖₁ s.t. x1 + x2 = 1: x* = (1,0), λ* = −1 (−Aᵀλ* = (1,1) ∈ ∂‖x*‖₁)
        let p = l1_example();
        let r = p.kkt_residual(&v(&[1.0, 0.0]), &v(&[-1.0]), None).unwrap();
        assert!(r.stationarity <= 1e-12 && r.feasibility <= 1e-12);
    }

    #[test]
    fn kkt_residual_with_zero_f_is_step_independent() {
        let mut rng = seeded_rng(5);
        let a = gaussian_matrix(&mut rng, 3, 6);
        let h = gaussian_matrix(&mut rng, 6, 6);
        let q = gaussian_vector(&mut rng, 6);
        let g = FunctionDescriptor::quadratic(Metric::dense(h.transpose() * &h).unwrap(), q).unwrap();
        let p = ProblemSpec::new(FunctionDescriptor::zero(), Some(g.clone()), a.clone(), gaussian_vector(&mut rng, 3)).unwrap();
        let x = gaussian_vector(&mut rng, 6);
        let l = gaussian_vector(&mut rng, 3);
        let direct = (g.gradient(&x).unwrap() + a.tr_mul(&l)).norm();
        for t in [1e-3, 0.1, 1.0, 7.0] {
            let r = p.kkt_residual(&x, &l, Some(t)).unwrap();
            assert!((r.stationarity - direct).abs() <= 1e-10 * direct);
        }
    }

    #[test]
    fn kkt_residual_rejects_bad_step() {
        let p = l1_example();
        assert!(p.kkt_residual(&v(&[1.0, 0.0]), &v(&[0.0]), Some(0.0)).is_err());
    }

    #[test]
    fn mismatched_b_is_rejected() {
        let r = ProblemSpec::new(FunctionDescriptor::l1(), None, Matrix::zeros(2, 3), v(&[1.0]));
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn wrong_lipschitz_constant_is_caught() {
        use crate::function::CustomFunction;
        use std::sync::Arc;
        let g = FunctionDescriptor::custom(CustomFunction {
            name: "sq".into(),
            value: Arc::new(|x: &Vector| 2.0 * x.norm_squared()),
            gradient: Some(Arc::new(|x: &Vector| x * 4.0)),
            prox: None,
            lipschitz: Some(1.0),
        })
        .unwrap();
        let r = ProblemSpec::new(FunctionDescriptor::zero(), Some(g), Matrix::zeros(1, 3), v(&[0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip_preserves_problem() {
        let mut rng = seeded_rng(9);
        let a = gaussian_matrix(&mut rng, 2, 3);
        let h = gaussian_matrix(&mut rng, 3, 3);
        let g = FunctionDescriptor::quadratic(
            Metric::dense(h.transpose() * &h).unwrap(),
            gaussian_vector(&mut rng, 3),
        )
        .unwrap();
        let p = ProblemSpec::new(FunctionDescriptor::nonneg_indicator(), Some(g), a, v(&[0.5, 0.25]))
            .unwrap()
            .with_reference(ReferenceSolution {
                x_star: v(&[0.1, 0.2, 0.3]),
                f_star: 1.5,
                lambda_star: Some(v(&[1.0, -1.0])),
                provenance: Provenance::OracleComputed,
            })
            .unwrap();
        let s = p.to_json().unwrap();
        let back = ProblemSpec::from_json(&s).unwrap();
        assert_eq!(back.a(), p.a());
        assert_eq!(back.b(), p.b());
        assert_eq!(back.to_json().unwrap(), s);
        let json: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["f", "g", "A", "b", "reference"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["reference"]["provenance"], "oracle-computed");
    }

    #[test]
    fn json_structured_hessian() {
        let s = r#"{"f":{"kind":"l1"},"g":{"kind":"quadratic","Q":{"scaled_identity":0.5},"q":[0,0]},"A":[[1,2]],"b":[1]}"#;
        let p = ProblemSpec::from_json(s).unwrap();
        assert_eq!(p.lipschitz_g(), 0.5);
        assert!(p.reference().is_none());
    }
}
