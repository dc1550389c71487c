use std::fs;

use ipd_core::bench::{InstanceSpec, DEFAULT_ORACLE_TOL};
use ipd_core::{Error, ProblemSpec, Result};

/// Loads `gen:family,key=val,...` or a problem JSON file. `seed` overrides the
/// generator seed.
pub fn load(source: &str, seed: Option<u64>) -> Result<ProblemSpec> {
    if source.starts_with("gen:") {
        let mut spec = InstanceSpec::parse_gen(source)?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        spec.build(DEFAULT_ORACLE_TOL)
    } else {
        let text = fs::read_to_string(source)
            .map_err(|e| Error::Config(format!("cannot read problem file '{source}': {e}")))?;
        ProblemSpec::from_json(&text).map_err(|e| Error::Config(format!("bad problem file '{source}': {e}")))
    }
}
