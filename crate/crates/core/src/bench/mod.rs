//! Instance generators, reference oracle, metrics and the experiment runner.

mod experiment;
mod generators;
mod instance;
mod metrics;
mod oracle;

pub use experiment::{
    build_method, run_experiment, AlgorithmConfig, AlgorithmName, ExperimentConfig, ExperimentReport, NamedValue,
    ParamValue, Preset, SummaryRow, SUMMARY_COLUMNS, THREADS_ENV,
};
pub use generators::{
    gen_basis_pursuit, gen_basis_pursuit_with, gen_l1l2, gen_l1l2_with, gen_nlcqp, gen_toy, l1l2_nonzeros,
};
pub use instance::{Family, InstanceSpec, DEFAULT_ORACLE_TOL};
pub use metrics::{metrics, RecoveryMetrics, SNR_CAP};
pub use oracle::{compute_reference_oracle, with_oracle_reference, ORACLE_AGREEMENT};
