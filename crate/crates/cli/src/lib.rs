//! Command-line runner for the `rso_core` estimators.
//!
//! A run is described by a [`RunConfig`]. [`run`] dispatches it, writes the
//! CSV data files and a `<command>.json` summary under `out_dir`, and returns
//! the summary. Identical configurations give byte-identical files.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use thiserror::Error;

use rso_core::beta_field::BetaFieldError;
use rso_core::resistance::ResistanceError;
use rso_core::spectral_stats::StatsError;

pub use commands::{laplace_lambdas, IdentitySummary, DERIVATIVE_TOL, HARMONICITY_TOL, IDENTITY_REL_TOL, ROOT_TOL};
pub use config::{to_config_file, BackendArg, BoundaryArg, Command, Grid, Radii, RunConfig, SEED_ENV};
pub use output::{Summary, VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        let config = match &e {
            StatsError::Config(_) | StatsError::Graph(_) => true,
            StatsError::Sampler(s) => matches!(
                s,
                BetaFieldError::Config(_)
                    | BetaFieldError::EmptyGraph
                    | BetaFieldError::ZeroEtaNotAcknowledged
                    | BetaFieldError::NotAPath
            ),
            StatsError::Resistance(r) => matches!(
                r,
                ResistanceError::BoxOrder { .. } | ResistanceError::NotLattice | ResistanceError::NodeOutOfRange(_)
            ),
            StatsError::Operator(_) => false,
        };
        if config {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Validates `cfg`, runs it inside a pool of `--workers` threads and writes
/// its outputs.
pub fn run(cfg: &RunConfig) -> Result<Summary, CliError> {
    cfg.validate()?;
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = rso_core::exec::with_workers(workers, || commands::dispatch(cfg))?;
    output::finish(cfg, report)
}

/// Full command-line entry: parses `args`, runs, prints the JSON summary to
/// stdout and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::from_args(args, std::env::var(SEED_ENV).ok()) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if summary.pass {
                EXIT_PASS
            } else {
                let failed: Vec<&str> = summary
                    .checks
                    .iter()
                    .filter(|(_, &ok)| !ok)
                    .map(|(k, _)| k.as_str())
                    .collect();
                eprintln!("rso: audit failed: {}", failed.join(", "));
                EXIT_AUDIT
            }
        }
        Err(e) => {
            eprintln!("rso: {e}");
            e.exit_code()
        }
    }
}
