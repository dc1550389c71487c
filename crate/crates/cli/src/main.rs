//! `ipd`: solve single problems, run experiment suites, certify traces.

mod bench;
mod certify;
mod problem;
mod solve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Stable exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CERT_FAILED: u8 = 1;
    pub const MAX_ITER: u8 = 2;
    pub const DIVERGED: u8 = 3;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const SOFTWARE: u8 = 70;
    pub const CANT_CREATE: u8 = 73;
    pub const IO: u8 = 74;
}

#[derive(Parser)]
#[command(name = "ipd", version, about = "Inertial primal-dual solvers for Ax = b constrained convex problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write its trace.
    Solve(solve::SolveArgs),
    /// Run an experiment suite from a config file or preset.
    Bench(bench::BenchArgs),
    /// Evaluate convergence certificates on a trace.
    Certify(certify::CertifyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Solve(a) => solve::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Certify(a) => certify::run(a),
    };
    ExitCode::from(code)
}
