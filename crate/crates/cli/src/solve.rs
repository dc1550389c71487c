use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use ipd_core::bench::{build_method, metrics, AlgorithmConfig, AlgorithmName, ParamValue};
use ipd_core::solvers::{run as run_method, EpsSchedule, InnerPolicy, RunOptions, StopReason, StopRule};
use ipd_core::Error;

use crate::exit;
use crate::problem;

#[derive(Clone, Copy, ValueEnum)]
pub enum Algorithm {
    Ippd,
    Iilppd,
    Alm,
    ProxAlm,
    LinAlm,
    Aalm,
}

impl From<Algorithm> for AlgorithmName {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Ippd => AlgorithmName::Ippd,
            Algorithm::Iilppd => AlgorithmName::Iilppd,
            Algorithm::Alm => AlgorithmName::Alm,
            Algorithm::ProxAlm => AlgorithmName::ProxAlm,
            Algorithm::LinAlm => AlgorithmName::LinAlm,
            Algorithm::Aalm => AlgorithmName::Aalm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Stop {
    /// `‖Axₖ − b‖ ≤ tol`
    Feas,
    /// `Res + Rel ≤ tol`; needs a reference solution
    ResRel,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Problem JSON file or `gen:family,key=val,...`
    #[arg(long)]
    problem: String,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Proximal weight `c` in `M = c·I`
    #[arg(long)]
    metric: Option<f64>,
    /// ALM penalty
    #[arg(long)]
    sigma: Option<f64>,
    /// ALM proximal weight `c` in `P = c·I`
    #[arg(long)]
    proximal: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Stopping tolerance; without it the run goes to `--max-iter`
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "feas")]
    stop: Stop,
    /// Fixed inner residual target; summable schedule when absent
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    inner_max_iter: usize,
    /// Overrides the generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(e: &Error) -> u8 {
    eprintln!("error: {e}");
    match e {
        Error::Diverged(_) => exit::DIVERGED,
        Error::Io(_) => exit::IO,
        Error::Numerical { .. } => exit::SOFTWARE,
        _ => exit::USAGE,
    }
}

pub fn run(a: SolveArgs) -> u8 {
    let p = match problem::load(&a.problem, a.seed) {
        Ok(p) => p,
        Err(e) => return usage_error(&e),
    };
    let v = |x: Option<f64>| x.map(ParamValue::Value);
    let stop = match (a.tol, a.stop) {
        (None, _) => StopRule::MaxIterOnly,
        (Some(t), Stop::Feas) => StopRule::FeasTol(t),
        (Some(t), Stop::ResRel) => StopRule::ResPlusRel(t),
    };
    let cfg = AlgorithmConfig {
        alpha: v(a.alpha),
        s: v(a.s),
        metric: v(a.metric),
        sigma: v(a.sigma),
        proximal: v(a.proximal),
        max_iter: a.max_iter,
        stop: Some(stop),
        ..AlgorithmConfig::new(a.algorithm.into())
    };
    let inner = InnerPolicy {
        eps: a.inner_tol.map(EpsSchedule::Fixed).unwrap_or_default(),
        max_iter: a.inner_max_iter,
    };
    let method = match build_method(&cfg, &p, inner) {
        Ok(m) => m,
        Err(e) => return usage_error(&e),
    };
    let trace = match run_method(&p, &method, &RunOptions::default()) {
        Ok(t) => t,
        Err(e) => return usage_error(&e),
    };
    if let Some(path) = &a.out {
        let written = File::create(path)
            .map_err(Error::from)
            .and_then(|f| trace.write_csv(BufWriter::new(f)));
        if let Err(e) = written {
            eprintln!("error: writing {}: {e}", path.display());
            return exit::IO;
        }
    }
    let mt = metrics(&trace.x, p.reference(), p.a(), p.b()).ok();
    let line = json!({
        "algorithm": trace.summary.algorithm,
        "iterations": trace.summary.iterations,
        "stop": trace.summary.stop,
        "res": trace.summary.res,
        "rel": trace.summary.rel,
        "snr": mt.and_then(|m| m.snr),
        "objective": trace.summary.objective,
        "e1": trace.e1,
        "wall_ms": trace.summary.wall_ms,
        "trace": a.out.as_ref().map(|p| p.display().to_string()),
    });
    println!("{line}");
    match trace.summary.stop {
        StopReason::Converged => exit::OK,
        StopReason::MaxIter => exit::MAX_ITER,
    }
}
