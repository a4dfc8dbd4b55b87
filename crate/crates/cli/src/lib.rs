//! Command-line front end for `manifold-points`.
//!
//! Every subcommand reads a [`RunConfig`], writes its machine-readable
//! result to one sink and human-readable diagnostics to another, and
//! reports whether the invariants it checks held.

pub mod commands;
pub mod config;
pub mod verify;

use std::io::Write;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{Arithmetic, Format, Options, RunConfig, Suite};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] manifold_points::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A checked invariant failed.
    Violation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Violation => 1,
        }
    }
}

/// Exit code for errors: every error is a problem with the request.
pub const USAGE_EXIT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Count,
    Scan,
    Bounds,
    Series,
    Cover,
    Verify,
    Presets,
}

#[derive(Debug, Parser)]
#[command(name = "mpoints", version, about = "Count rational points near manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// A(q, psi, theta) for one q.
    Count(Options),
    /// One CSV row per support member q in [qmin, qmax].
    Scan(Options),
    /// Block-by-block check of A_u <= B_u <= (pi^2/4)^m B*_u.
    Bounds(Options),
    /// Partial sums, convergence class and critical exponents.
    Series(Options),
    /// Cover cells and the Hausdorff sum for one q or a range.
    Cover(Options),
    /// Seeded property suite.
    Verify(Options),
    /// List the built-in manifolds.
    Presets,
}

impl CliCommand {
    pub fn split(self) -> (Command, Options) {
        match self {
            CliCommand::Count(o) => (Command::Count, o),
            CliCommand::Scan(o) => (Command::Scan, o),
            CliCommand::Bounds(o) => (Command::Bounds, o),
            CliCommand::Series(o) => (Command::Series, o),
            CliCommand::Cover(o) => (Command::Cover, o),
            CliCommand::Verify(o) => (Command::Verify, o),
            CliCommand::Presets => (Command::Presets, Options::default()),
        }
    }
}

/// Runs `command` on a pool of `cfg.threads` workers (rayon's default when
/// unset).
pub fn execute(
    command: Command,
    cfg: &RunConfig,
    out: &mut (dyn Write + Send),
    diag: &mut (dyn Write + Send),
) -> Result<Status, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()?;
    pool.install(|| commands::run(command, cfg, out, diag))
}

/// Runs `command` and returns its primary output.
pub fn execute_to_bytes(command: Command, cfg: &RunConfig) -> Result<(Status, Vec<u8>), CliError> {
    let mut out = Vec::new();
    let status = execute(command, cfg, &mut out, &mut std::io::sink())?;
    Ok((status, out))
}
