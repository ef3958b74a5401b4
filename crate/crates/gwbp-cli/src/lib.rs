//! Command-line front end: argument model, command implementations and output.

pub mod commands;
pub mod output;
pub mod spec;

use anyhow::{Context, Result};

use crate::commands::{execute, Output};
use crate::spec::{Command, RunSpec};

/// Resolves `run` to the saved specification, otherwise returns the spec as given.
pub fn resolve(spec: RunSpec) -> Result<RunSpec> {
    match &spec.command {
        Command::Run { spec: path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let loaded = RunSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            if matches!(loaded.command, Command::Run { .. }) {
                anyhow::bail!("{} points at another run specification", path.display());
            }
            Ok(loaded)
        }
        _ => Ok(spec),
    }
}

/// Executes a resolved spec and returns the rendered bytes.
pub fn run_to_bytes(spec: &RunSpec) -> Result<Vec<u8>> {
    let p = &spec.params;
    match execute(&spec.command, p)? {
        Output::Table(t) => output::render(&t, p.format, p.digits),
        Output::Report(v) => {
            let mut bytes = serde_json::to_vec_pretty(&v)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// Exit code for an error: 2 for bad input, 3 for a failed applicability condition, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<gwbp::Error>() {
        Some(gwbp::Error::Domain(_) | gwbp::Error::Size(_)) => 2,
        Some(gwbp::Error::Applicability { .. }) => 3,
        _ => 1,
    }
}

pub fn error_json(err: &anyhow::Error) -> String {
    let kind = err.downcast_ref::<gwbp::Error>().map_or("error", gwbp::Error::kind);
    serde_json::json!({"error": kind, "message": format!("{err:#}")}).to_string()
}
