//! Instance descriptions and the `gen:family,key=val,...` mini-language.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

use super::generators::{gen_basis_pursuit_with, gen_l1l2_with, gen_nlcqp, gen_toy, l1l2_nonzeros};
use super::oracle::with_oracle_reference;

pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Nlcqp,
    #[serde(alias = "bp")]
    BasisPursuit,
    L1l2,
    Toy,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Nlcqp => "nlcqp",
            Family::BasisPursuit => "basis_pursuit",
            Family::L1l2 => "l1l2",
            Family::Toy => "toy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nlcqp" => Ok(Family::Nlcqp),
            "bp" | "basis_pursuit" => Ok(Family::BasisPursuit),
            "l1l2" => Ok(Family::L1l2),
            "toy" => Ok(Family::Toy),
            _ => Err(Error::Config(format!(
                "unknown family '{s}' (expected nlcqp, bp, l1l2 or toy)"
            ))),
        }
    }

    fn default_dims(&self) -> (usize, usize) {
        match self {
            Family::Nlcqp => (20, 100),
            Family::BasisPursuit => (60, 100),
            Family::L1l2 => (300, 600),
            Family::Toy => (5, 20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// Fraction of planted nonzeros; family default when absent.
    pub sparsity: Option<f64>,
    pub beta: f64,
    pub noise: f64,
}

impl InstanceSpec {
    pub fn new(family: Family) -> Self {
        let (m, n) = family.default_dims();
        InstanceSpec {
            family,
            m,
            n,
            seed: 0,
            sparsity: None,
            beta: 0.5,
            noise: 1e-4,
        }
    }

    /// Parses `gen:bp,m=60,n=100,seed=7`. Keys: `m n seed sparsity beta noise`.
    pub fn parse_gen(s: &str) -> Result<Self> {
        let body = s
            .strip_prefix("gen:")
            .ok_or_else(|| Error::Config(format!("generator spec must start with 'gen:', got '{s}'")))?;
        let mut parts = body.split(',').map(str::trim);
        let family = Family::parse(parts.next().unwrap_or(""))?;
        let mut spec = InstanceSpec::new(family);
        for kv in parts.filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{kv}'")))?;
            let bad = || Error::Config(format!("bad value '{v}' for '{k}'"));
            match k {
                "m" => spec.m = v.parse().map_err(|_| bad())?,
                "n" => spec.n = v.parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.parse().map_err(|_| bad())?,
                "sparsity" => spec.sparsity = Some(v.parse().map_err(|_| bad())?),
                "beta" => spec.beta = v.parse().map_err(|_| bad())?,
                "noise" => spec.noise = v.parse().map_err(|_| bad())?,
                _ => return Err(Error::Config(format!("unknown generator key '{k}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let ok = match self.family {
            Family::Nlcqp => m > 0 && m < n,
            _ => m > 0 && m <= n,
        };
        if !ok {
            return Err(Error::Config(format!("{}: invalid dimensions m={m}, n={n}", self.family.name())));
        }
        if let Some(f) = self.sparsity {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("sparsity must lie in (0, 1], got {f}")));
            }
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::Config(format!("noise must be >= 0, got {}", self.noise)));
        }
        Ok(())
    }

    fn nonzeros(&self, default: usize) -> usize {
        match self.sparsity {
            Some(f) => ((f * self.n as f64).round() as usize).clamp(1, self.n),
            None => default,
        }
    }

    /// Generates the instance. NLCQP instances get an oracle reference.
    pub fn build(&self, oracle_tol: f64) -> Result<ProblemSpec> {
        self.validate()?;
        let (m, n, seed) = (self.m, self.n, self.seed);
        match self.family {
            Family::Nlcqp => with_oracle_reference(gen_nlcqp(m, n, seed)?, oracle_tol),
            Family::BasisPursuit => {
                let nnz = self.nonzeros(((0.1 * n as f64).round() as usize).max(1));
                gen_basis_pursuit_with(m, n, seed, nnz)
            }
            Family::L1l2 => gen_l1l2_with(m, n, seed, self.beta, self.noise, self.nonzeros(l1l2_nonzeros(n))),
            Family::Toy => gen_toy(m, n, seed),
        }
    }
}
