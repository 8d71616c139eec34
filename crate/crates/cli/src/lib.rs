//! Batch front end for `ctrfn-core`: read a JSON config, run one command,
//! write a JSON report, and exit with 0 (ok), 1 (error) or 2 (inconclusive).

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;

use std::path::Path;

use ctrfn_core::{CanonicalError, CharFnError, CoincideError, ModelError, NumError, WindowError};
use serde_json::Value;
use thiserror::Error;

pub use config::{Command, ConfigError, RunConfig};
pub use report::{Report, Status};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    CharFn(#[from] CharFnError),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Coincide(#[from] CoincideError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Parses, validates and runs one command. Never fails: problems end up in
/// the report with status `error`.
pub fn execute(command: Command, text: &str, seed: Option<u64>, env_tol: Option<&str>) -> Report {
    let (cfg, raw) = match RunConfig::parse(text) {
        Ok(parsed) => parsed,
        Err(e) => {
            return Report::failed(
                command,
                Value::Null,
                Default::default(),
                seed.unwrap_or(0),
                e.to_string(),
            );
        }
    };
    let seed = seed.unwrap_or(cfg.seed);
    let tol = match cfg.tolerance(env_tol) {
        Ok(t) => t,
        Err(e) => return Report::failed(command, raw, Default::default(), seed, e.to_string()),
    };
    if let Err(e) = cfg.validate(command) {
        return Report::failed(command, raw, tol, seed, e.to_string());
    }
    match run::run(command, &cfg, &tol, seed) {
        Ok(out) => Report {
            command,
            config: raw,
            tolerance: tol,
            seed,
            status: out.status,
            results: out.results,
            certificates: out.certificates,
            warnings: out.warnings,
            error: out.error,
        },
        Err(e) => Report::failed(command, raw, tol, seed, e.to_string()),
    }
}

/// Reads the config file, runs, and writes the report to `out`, the
/// config's own `out`, or stdout.
pub fn execute_file(
    command: Command,
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    env_tol: Option<&str>,
) -> std::io::Result<Report> {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            let err = ConfigError::Io {
                path: config.display().to_string(),
                source: e,
            };
            let report = Report::failed(
                command,
                Value::Null,
                Default::default(),
                seed.unwrap_or(0),
                err.to_string(),
            );
            report.write(out)?;
            return Ok(report);
        }
    };
    let report = execute(command, &text, seed, env_tol);
    let from_config = serde_json::from_str::<Value>(&text)
        .ok()
        .and_then(|v| v.get("out").and_then(Value::as_str).map(std::path::PathBuf::from));
    report.write(out.or(from_config.as_deref()))?;
    Ok(report)
}
