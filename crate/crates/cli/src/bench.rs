use std::fs;
use std::path::PathBuf;

use clap::{ArgGroup, Args};
use serde_json::json;

use ipd_core::bench::{run_experiment, ExperimentConfig, Preset};
use ipd_core::Error;

use crate::exit;

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct BenchArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: Option<PathBuf>,
    /// nlcqp-paper, bp-paper or l1l2-paper
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the fixed inner residual target
    #[arg(long)]
    subtol: Option<f64>,
    /// Overrides β for the ℓ1-ℓ2 family
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory; overrides the config's `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing summary files
    #[arg(long)]
    force: bool,
}

fn config_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    exit::DATA
}

pub fn run(a: BenchArgs) -> u8 {
    let mut cfg = if let Some(path) = &a.config {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return exit::IO;
            }
        };
        match ExperimentConfig::from_json(&text) {
            Ok(c) => c,
            Err(e) => return config_error(e),
        }
    } else {
        let name = a.preset.as_deref().unwrap_or_default();
        match name.parse::<Preset>() {
            Ok(p) => ExperimentConfig::preset(p, PathBuf::from("bench-out").join(name)),
            Err(e) => return config_error(e),
        }
    };
    if let Some(t) = a.subtol {
        cfg.subtol = Some(t);
    }
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Err(e) = cfg.validate() {
        return config_error(e);
    }
    match run_experiment(&cfg, a.force) {
        Ok(rep) => {
            let failed = rep.rows.iter().filter(|r| r.error.is_some()).count();
            let line = json!({
                "rows": rep.rows.len(),
                "failed": failed,
                "summary_csv": rep.summary_csv.display().to_string(),
                "summary_json": rep.summary_json.display().to_string(),
            });
            println!("{line}");
            exit::OK
        }
        Err(Error::OutputExists(p)) => {
            eprintln!("error: {p} exists; pass --force to overwrite");
            exit::CANT_CREATE
        }
        Err(e @ (Error::Io(_) | Error::Csv(_) | Error::Json(_))) => {
            eprintln!("error: {e}");
            exit::IO
        }
        Err(e) => config_error(e),
    }
}
