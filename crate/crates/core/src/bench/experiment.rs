//! Experiment configuration, presets and the parallel runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::problem::ProblemSpec;
use crate::solvers::{
    run, AalmParams, AlgParams, AlmParams, EpsSchedule, InnerPolicy, Method, MetricSchedule, RunOptions, StopReason,
    StopRule,
};

use super::instance::{Family, InstanceSpec, DEFAULT_ORACLE_TOL};
use super::metrics::metrics;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "IPD_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Ippd,
    Iilppd,
    Alm,
    ProxAlm,
    LinAlm,
    Aalm,
}

impl AlgorithmName {
    pub const ALL: [AlgorithmName; 6] = [
        AlgorithmName::Ippd,
        AlgorithmName::Iilppd,
        AlgorithmName::Alm,
        AlgorithmName::ProxAlm,
        AlgorithmName::LinAlm,
        AlgorithmName::Aalm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmName::Ippd => "ippd",
            AlgorithmName::Iilppd => "iilppd",
            AlgorithmName::Alm => "alm",
            AlgorithmName::ProxAlm => "prox-alm",
            AlgorithmName::LinAlm => "lin-alm",
            AlgorithmName::Aalm => "aalm",
        }
    }
}

impl FromStr for AlgorithmName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmName::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedValue {
    /// The instance's column count.
    N,
    /// The Lipschitz constant of `∇g`.
    LipschitzG,
}

/// A number, or a quantity read off the instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Value(f64),
    Named(NamedValue),
}

impl ParamValue {
    pub fn resolve(&self, p: &ProblemSpec) -> f64 {
        match self {
            ParamValue::Value(v) => *v,
            ParamValue::Named(NamedValue::N) => p.n() as f64,
            ParamValue::Named(NamedValue::LipschitzG) => p.lipschitz_g(),
        }
    }
}

fn default_max_iter() -> usize {
    1000
}

/// One algorithm entry. Unset parameters take the defaults listed on
/// [`build_method`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: AlgorithmName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<ParamValue>,
    /// `M = c·I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<ParamValue>,
    /// `P = c·I` for the ALM baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximal: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox_scale: Option<ParamValue>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopRule>,
}

impl AlgorithmConfig {
    pub fn new(algorithm: AlgorithmName) -> Self {
        AlgorithmConfig {
            algorithm,
            alpha: None,
            s: None,
            metric: None,
            sigma: None,
            proximal: None,
            penalty: None,
            prox_scale: None,
            max_iter: default_max_iter(),
            stop: None,
        }
    }
}

fn scaled(c: f64) -> Result<Metric> {
    if c == 0.0 {
        Ok(Metric::Zero)
    } else {
        Metric::scaled_identity(c)
    }
}

/// Resolves an algorithm entry against an instance.
///
/// Defaults: `α = 3`, `s = 1`; `M = 0` for `ippd` and `M = s·L_g·I` for
/// `iilppd`; `σ = 1` with `P = 0` (`alm`), `P = I` (`prox-alm`) or
/// `P = L_g·I` (`lin-alm`); AALM penalty `L_g` and prox scale `2L_g`.
pub fn build_method(cfg: &AlgorithmConfig, p: &ProblemSpec, inner: InnerPolicy) -> Result<Method> {
    let get = |v: Option<ParamValue>, d: f64| v.map(|v| v.resolve(p)).unwrap_or(d);
    let stop = cfg.stop.unwrap_or(StopRule::MaxIterOnly);
    let lg = p.lipschitz_g();
    let method = match cfg.algorithm {
        AlgorithmName::Ippd | AlgorithmName::Iilppd => {
            let linearized = cfg.algorithm == AlgorithmName::Iilppd;
            let s = get(cfg.s, 1.0);
            let c = get(cfg.metric, if linearized { s * lg } else { 0.0 });
            let params = AlgParams {
                alpha: get(cfg.alpha, 3.0),
                s,
                metric: MetricSchedule::Constant(scaled(c)?),
                inner,
                max_outer: cfg.max_iter,
                stop,
                ..AlgParams::default()
            };
            if linearized {
                Method::Iilppd(params)
            } else {
                Method::Ippd(params)
            }
        }
        AlgorithmName::Alm | AlgorithmName::ProxAlm | AlgorithmName::LinAlm => {
            let default_p = match cfg.algorithm {
                AlgorithmName::Alm => 0.0,
                AlgorithmName::ProxAlm => 1.0,
                _ => lg,
            };
            let params = AlmParams {
                sigma: get(cfg.sigma, 1.0),
                proximal: scaled(get(cfg.proximal, default_p))?,
                inner,
                max_outer: cfg.max_iter,
                stop,
            };
            match cfg.algorithm {
                AlgorithmName::Alm => Method::Alm(params),
                AlgorithmName::ProxAlm => Method::ProxAlm(params),
                _ => Method::LinAlm(params),
            }
        }
        AlgorithmName::Aalm => {
            let d = AalmParams::defaults_for(p);
            Method::Aalm(AalmParams {
                penalty: get(cfg.penalty, d.penalty),
                prox_scale: get(cfg.prox_scale, d.prox_scale),
                inner,
                max_outer: cfg.max_iter,
                stop,
            })
        }
    };
    method.validate(p)?;
    Ok(method)
}

/// `(α, s)` reported in summary rows; `s` is `σ` for ALM and the penalty for AALM.
fn reported_params(m: &Method) -> (Option<f64>, Option<f64>) {
    match m {
        Method::Ippd(a) | Method::Iilppd(a) => (Some(a.alpha), Some(a.s)),
        Method::Alm(a) | Method::ProxAlm(a) | Method::LinAlm(a) => (None, Some(a.sigma)),
        Method::Aalm(a) => (None, Some(a.penalty)),
    }
}

fn default_noise() -> f64 {
    1e-4
}
fn default_beta() -> f64 {
    0.5
}
fn default_repeat() -> usize {
    1
}
fn default_inner_max_iter() -> usize {
    10_000
}
fn default_oracle_tol() -> f64 {
    DEFAULT_ORACLE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    /// `(m, n)` per instance.
    pub dimensions: Vec<(usize, usize)>,
    #[serde(default)]
    pub sparsity: Option<f64>,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    pub algorithms: Vec<AlgorithmConfig>,
    /// Fixed inner residual target; the summable schedule when absent.
    #[serde(default)]
    pub subtol: Option<f64>,
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    #[serde(default = "default_inner_max_iter")]
    pub inner_max_iter: usize,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    NlcqpPaper,
    BpPaper,
    L1l2Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nlcqp-paper" => Ok(Preset::NlcqpPaper),
            "bp-paper" => Ok(Preset::BpPaper),
            "l1l2-paper" => Ok(Preset::L1l2Paper),
            _ => Err(Error::Config(format!(
                "unknown preset '{s}' (expected nlcqp-paper, bp-paper or l1l2-paper)"
            ))),
        }
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset, output_dir: impl Into<PathBuf>) -> Self {
        let v = ParamValue::Value;
        let (family, dimensions, algorithms, subtol) = match preset {
            Preset::NlcqpPaper => {
                let mut algs: Vec<AlgorithmConfig> = [10.0, 20.0, 30.0]
                    .into_iter()
                    .map(|alpha| AlgorithmConfig {
                        alpha: Some(v(alpha)),
                        s: Some(ParamValue::Named(NamedValue::LipschitzG)),
                        max_iter: 500,
                        ..AlgorithmConfig::new(AlgorithmName::Iilppd)
                    })
                    .collect();
                algs.push(AlgorithmConfig {
                    max_iter: 500,
                    ..AlgorithmConfig::new(AlgorithmName::Aalm)
                });
                (Family::Nlcqp, vec![(100, 500)], algs, 1e-8)
            }
            Preset::BpPaper => (
                Family::BasisPursuit,
                vec![(60, 100), (200, 300), (300, 500), (600, 1000), (1000, 1500)],
                vec![AlgorithmConfig {
                    alpha: Some(ParamValue::Named(NamedValue::N)),
                    s: Some(v(100.0)),
                    metric: Some(v(0.0)),
                    stop: Some(StopRule::ResPlusRel(1e-8)),
                    ..AlgorithmConfig::new(AlgorithmName::Ippd)
                }],
                1e-8,
            ),
            Preset::L1l2Paper => (
                Family::L1l2,
                vec![(1500, 3000)],
                vec![AlgorithmConfig {
                    alpha: Some(v(20.0)),
                    s: Some(v(1.0)),
                    stop: Some(StopRule::FeasTol(5e-4)),
                    ..AlgorithmConfig::new(AlgorithmName::Iilppd)
                }],
                1e-8,
            ),
        };
        ExperimentConfig {
            family,
            dimensions,
            sparsity: None,
            noise: default_noise(),
            beta: default_beta(),
            seed: 0,
            algorithms,
            subtol: Some(subtol),
            repeat: 1,
            inner_max_iter: default_inner_max_iter(),
            oracle_tol: default_oracle_tol(),
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn instances(&self) -> Vec<InstanceSpec> {
        self.dimensions
            .iter()
            .map(|&(m, n)| InstanceSpec {
                family: self.family,
                m,
                n,
                seed: self.seed,
                sparsity: self.sparsity,
                beta: self.beta,
                noise: self.noise,
            })
            .collect()
    }

    pub fn inner_policy(&self) -> InnerPolicy {
        InnerPolicy {
            eps: match self.subtol {
                Some(t) => EpsSchedule::Fixed(t),
                None => EpsSchedule::default(),
            },
            max_iter: self.inner_max_iter,
        }
    }

    /// Checks everything that does not need a generated instance.
    pub fn validate(&self) -> Result<()> {
        if self.repeat < 1 {
            return Err(Error::Config("repeat must be at least 1".into()));
        }
        if let Some(t) = self.subtol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("subtol must be positive, got {t}")));
            }
        }
        if self.inner_max_iter == 0 {
            return Err(Error::Config("inner_max_iter must be positive".into()));
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol <= 1e-10) {
            return Err(Error::Config(format!("oracle_tol must lie in (0, 1e-10], got {}", self.oracle_tol)));
        }
        for inst in self.instances() {
            inst.validate()?;
        }
        for a in &self.algorithms {
            if let Some(StopRule::FeasTol(t) | StopRule::ResPlusRel(t)) = a.stop {
                if !(t > 0.0) {
                    return Err(Error::Config(format!("{}: stop tolerance must be positive", a.algorithm.name())));
                }
            }
        }
        Ok(())
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub algorithm: String,
    pub alpha: Option<f64>,
    pub s: Option<f64>,
    pub subtol: Option<f64>,
    #[serde(rename = "Init")]
    pub init: usize,
    #[serde(rename = "Res")]
    pub res: Option<f64>,
    #[serde(rename = "Rel")]
    pub rel: Option<f64>,
    #[serde(rename = "SNR")]
    pub snr: Option<f64>,
    #[serde(rename = "Time_ms")]
    pub time_ms: f64,
    pub converged: bool,
    pub repeat: usize,
    pub beta: Option<f64>,
    pub trace: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<SummaryRow>,
    pub summary_csv: PathBuf,
    pub summary_json: PathBuf,
}

struct Task {
    instance: usize,
    algorithm: usize,
    repeat: usize,
}

struct Outcome {
    row: SummaryRow,
    trace: Option<(String, Vec<u8>)>,
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn base_row(cfg: &ExperimentConfig, inst: &InstanceSpec, name: &str, repeat: usize) -> SummaryRow {
    SummaryRow {
        family: inst.family.name().to_string(),
        m: inst.m,
        n: inst.n,
        seed: inst.seed,
        algorithm: name.to_string(),
        alpha: None,
        s: None,
        subtol: cfg.subtol,
        init: 0,
        res: None,
        rel: None,
        snr: None,
        time_ms: 0.0,
        converged: false,
        repeat,
        beta: (inst.family == Family::L1l2).then_some(inst.beta),
        trace: None,
        error: None,
    }
}

fn execute(p: &ProblemSpec, method: &Method, mut row: SummaryRow, trace_name: String) -> Outcome {
    let (alpha, s) = reported_params(method);
    row.alpha = alpha;
    row.s = s;
    let start = Instant::now();
    let result = run(p, method, &RunOptions::default());
    row.time_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(t) => {
            row.init = t.summary.iterations;
            row.converged = t.summary.stop == StopReason::Converged;
            match metrics(&t.x, p.reference(), p.a(), p.b()) {
                Ok(mt) => {
                    row.res = Some(mt.res);
                    row.rel = mt.rel;
                    row.snr = mt.snr;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            let mut buf = Vec::new();
            match t.write_csv(&mut buf) {
                Ok(()) => {
                    row.trace = Some(trace_name.clone());
                    Outcome {
                        row,
                        trace: Some((trace_name, buf)),
                    }
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    Outcome { row, trace: None }
                }
            }
        }
        Err(e) => {
            if let Error::Diverged(last) = &e {
                row.init = last.k;
            }
            row.error = Some(e.to_string());
            Outcome { row, trace: None }
        }
    }
}

fn check_output(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::OutputExists(path.display().to_string()));
    }
    Ok(())
}

/// Runs every (instance × algorithm × repeat) combination and writes
/// `summary.csv`, `summary.json` and one trace CSV per successful run under
/// `cfg.output_dir/traces`. Failed runs become rows with `error` set.
pub fn run_experiment(cfg: &ExperimentConfig, force: bool) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    let summary_csv = dir.join("summary.csv");
    let summary_json = dir.join("summary.json");
    check_output(&summary_csv, force)?;
    check_output(&summary_json, force)?;

    let specs = cfg.instances();
    let inner = cfg.inner_policy();
    let problems: Vec<std::result::Result<ProblemSpec, String>> = specs
        .iter()
        .map(|s| s.build(cfg.oracle_tol).map_err(|e| e.to_string()))
        .collect();
    let mut methods = Vec::with_capacity(problems.len());
    for (spec, p) in specs.iter().zip(&problems) {
        let mut row = Vec::with_capacity(cfg.algorithms.len());
        for a in &cfg.algorithms {
            row.push(match p {
                Ok(p) => Some(build_method(a, p, inner).map_err(|e| {
                    Error::Config(format!(
                        "{} on {} m={} n={}: {e}",
                        a.algorithm.name(),
                        spec.family.name(),
                        spec.m,
                        spec.n
                    ))
                })?),
                Err(_) => None,
            });
        }
        methods.push(row);
    }

    let mut tasks = Vec::new();
    for instance in 0..specs.len() {
        for algorithm in 0..cfg.algorithms.len() {
            for repeat in 0..cfg.repeat {
                tasks.push(Task {
                    instance,
                    algorithm,
                    repeat,
                });
            }
        }
    }
    let work = |t: &Task| -> Outcome {
        let spec = &specs[t.instance];
        let name = cfg.algorithms[t.algorithm].algorithm.name();
        let mut row = base_row(cfg, spec, name, t.repeat);
        match (&problems[t.instance], &methods[t.instance][t.algorithm]) {
            (Ok(p), Some(method)) => {
                let trace_name = format!(
                    "traces/{}_m{}_n{}_seed{}_{:02}-{}_r{}.csv",
                    spec.family.name(),
                    spec.m,
                    spec.n,
                    spec.seed,
                    t.algorithm,
                    name,
                    t.repeat
                );
                execute(p, method, row, trace_name)
            }
            (Err(e), _) => {
                row.error = Some(e.clone());
                Outcome { row, trace: None }
            }
            (Ok(_), None) => unreachable!("methods are built for every generated instance"),
        }
    };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_count() {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?
    };
    let outcomes: Vec<Outcome> = pool.install(|| tasks.par_iter().map(work).collect());

    fs::create_dir_all(dir.join("traces"))?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if let Some((name, bytes)) = o.trace {
            fs::write(dir.join(name), bytes)?;
        }
        rows.push(o.row);
    }
    let mut w = csv::Writer::from_path(&summary_csv)?;
    for r in &rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(SUMMARY_COLUMNS)?;
    }
    w.flush()?;
    let json = serde_json::json!({ "config": cfg, "rows": rows });
    fs::write(&summary_json, serde_json::to_string_pretty(&json)? + "\n")?;
    Ok(ExperimentReport {
        rows,
        summary_csv,
        summary_json,
    })
}

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "family",
    "m",
    "n",
    "seed",
    "algorithm",
    "alpha",
    "s",
    "subtol",
    "Init",
    "Res",
    "Rel",
    "SNR",
    "Time_ms",
    "converged",
    "repeat",
    "beta",
    "trace",
    "error",
];
