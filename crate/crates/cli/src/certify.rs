use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use ipd_core::bench::{compute_reference_oracle, DEFAULT_ORACLE_TOL};
use ipd_core::diagnostics::{certify_table, perturbed_constant, weighted_eps_sum, CertifyInputs};
use ipd_core::solvers::TraceTable;
use ipd_core::Error;

use crate::exit;
use crate::problem;

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Variant {
    /// Exact subproblems: bounds use `E₁`
    Ippd,
    /// Linearized, inexact: bounds use the perturbed constant
    Iilppd,
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Problem JSON file or `gen:family,key=val,...`
    #[arg(long)]
    problem: String,
    /// Compute the reference with the oracle instead of reading it
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "ippd")]
    algorithm: Variant,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// `c` in `M₀ = c·I`; defaults to 0 (ippd) or `s·L_g` (iilppd)
    #[arg(long)]
    metric: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    margin: f64,
    /// Allowed energy increase relative to `1 + |E₁|`
    #[arg(long, default_value_t = 1e-8)]
    energy_tol: f64,
    #[arg(long, default_value_t = 10)]
    slope_min: usize,
    /// Last iteration of the slope window; the end of the trace when absent
    #[arg(long)]
    slope_max: Option<usize>,
    #[arg(long, default_value_t = -1.5, allow_negative_numbers = true)]
    slope_threshold: f64,
    /// Overrides the generator seed
    #[arg(long)]
    seed: Option<u64>,
}

fn data_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    exit::DATA
}

/// Runs are assumed to start from `x₁ = 0`, `λ₁ = 0`.
pub fn run(a: CertifyArgs) -> u8 {
    let p = match problem::load(&a.problem, a.seed) {
        Ok(p) => p,
        Err(e) => return data_error(e),
    };
    let reference = if a.oracle {
        match compute_reference_oracle(&p, DEFAULT_ORACLE_TOL) {
            Ok(r) => r,
            Err(e) => return data_error(e),
        }
    } else {
        match p.reference() {
            Some(r) => r.clone(),
            None => return data_error("problem has no reference solution; pass --oracle"),
        }
    };
    let Some(lambda_star) = reference.lambda_star.clone() else {
        return data_error("reference has no multipliers; pass --oracle");
    };
    let file = match File::open(&a.trace) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", a.trace.display());
            return exit::IO;
        }
    };
    let table = match TraceTable::read_csv(BufReader::new(file)) {
        Ok(t) => t,
        Err(e) => return data_error(e),
    };
    if table.is_empty() {
        return data_error(Error::InsufficientData("trace has no rows".into()));
    }

    let lg = p.lipschitz_g();
    let c = a.metric.unwrap_or(match a.algorithm {
        Variant::Ippd => 0.0,
        Variant::Iilppd => a.s * lg,
    });
    let e1 = 0.5 * c * reference.x_star.norm_squared() + 0.5 * lambda_star.norm_squared();
    let e = match a.algorithm {
        Variant::Ippd => e1,
        Variant::Iilppd => perturbed_constant(e1, a.alpha, a.s, lg, weighted_eps_sum(&table)),
    };
    let last = *table.k.last().expect("nonempty table");
    let inputs = CertifyInputs {
        alpha: a.alpha,
        s: a.s,
        e,
        e1,
        f_star: reference.f_star,
        lambda_norm: lambda_star.norm(),
        margin: a.margin,
        energy_tol: a.energy_tol,
        slope_window: (a.slope_min, a.slope_max.unwrap_or(last).min(last)),
        slope_threshold: a.slope_threshold,
    };
    let certs = match certify_table(&table, &inputs) {
        Ok(c) => c,
        Err(e) => return data_error(e),
    };
    match serde_json::to_string(&certs) {
        Ok(s) => println!("{s}"),
        Err(e) => {
            eprintln!("error: {e}");
            return exit::SOFTWARE;
        }
    }
    if certs.iter().all(|c| c.pass) {
        exit::OK
    } else {
        exit::CERT_FAILED
    }
}
