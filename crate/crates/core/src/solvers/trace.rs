//! Per-iteration records, run summaries and the trace CSV format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector;

use super::state::StepVectors;

/// One row of a trace. `k` is the index of the iterate the row describes.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub obj_gap: Option<f64>,
    pub feas: f64,
    /// `Eₖ`, or the perturbed energy for the linearized method.
    pub energy: Option<f64>,
    pub eps_norm: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
    pub time_ms: f64,
    /// `‖xₖ − x̄ₖ₋₁‖²_{Mₖ₋₁} + ‖λₖ − λ̄ₖ₋₁‖²` for the inertial methods.
    pub step_sq: Option<f64>,
    pub vectors: Option<Box<StepVectors>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub algorithm: String,
    pub iterations: usize,
    pub res: f64,
    pub rel: Option<f64>,
    pub objective: f64,
    pub stop: StopReason,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub summary: TraceSummary,
    /// `E₁` when a KKT point was available.
    pub e1: Option<f64>,
    pub x: Vector,
    pub lambda: Vector,
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "k",
    "objective",
    "obj_gap",
    "feas",
    "energy",
    "eps_norm",
    "inner_iters",
    "inner_converged",
    "time_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Trace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = TRACE_COLUMNS.to_vec();
        header.push("step_sq");
        out.write_record(&header)?;
        for r in &self.records {
            out.write_record([
                r.k.to_string(),
                r.objective.to_string(),
                opt(r.obj_gap),
                r.feas.to_string(),
                opt(r.energy),
                r.eps_norm.to_string(),
                r.inner_iters.to_string(),
                r.inner_converged.to_string(),
                format!("{:.3}", r.time_ms),
                opt(r.step_sq),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn feasibility_series(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.k, r.feas)).collect()
    }
}

/// A trace read back from CSV, scalars only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceTable {
    pub k: Vec<usize>,
    pub objective: Vec<f64>,
    pub obj_gap: Vec<Option<f64>>,
    pub feas: Vec<f64>,
    pub energy: Vec<Option<f64>>,
    pub eps_norm: Vec<f64>,
    pub step_sq: Vec<Option<f64>>,
}

impl TraceTable {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn from_trace(t: &Trace) -> Self {
        let mut tab = TraceTable::default();
        for r in &t.records {
            tab.k.push(r.k);
            tab.objective.push(r.objective);
            tab.obj_gap.push(r.obj_gap);
            tab.feas.push(r.feas);
            tab.energy.push(r.energy);
            tab.eps_norm.push(r.eps_norm);
            tab.step_sq.push(r.step_sq);
        }
        tab
    }

    /// Reads a trace CSV. Every column of [`TRACE_COLUMNS`] must be present.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let mut idx = Vec::new();
        for name in TRACE_COLUMNS {
            idx.push(col(name).ok_or_else(|| Error::Config(format!("trace is missing column '{name}'")))?);
        }
        let step_idx = col("step_sq");
        let parse = |s: &str, name: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value '{s}' in column '{name}'")))
        };
        let parse_opt = |s: &str, name: &str| -> Result<Option<f64>> {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                parse(s, name).map(Some)
            }
        };
        let mut tab = TraceTable::default();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            tab.k.push(
                field(idx[0])
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad iteration index '{}'", field(idx[0]))))?,
            );
            tab.objective.push(parse(field(idx[1]), "objective")?);
            tab.obj_gap.push(parse_opt(field(idx[2]), "obj_gap")?);
            tab.feas.push(parse(field(idx[3]), "feas")?);
            tab.energy.push(parse_opt(field(idx[4]), "energy")?);
            tab.eps_norm.push(parse(field(idx[5]), "eps_norm")?);
            tab.step_sq.push(match step_idx {
                Some(i) => parse_opt(field(i), "step_sq")?,
                None => None,
            });
        }
        Ok(tab)
    }
}
