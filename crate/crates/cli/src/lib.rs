//! Config-driven experiment runner. Each run writes `summary.json` and
//! `detail.csv` into an output directory.

use std::fs;
use std::path::Path;

use serde_json::Value as Json;

pub mod config;
mod experiments;

pub use config::{Config, Experiment, EXPERIMENTS};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SLICEDICE_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn config(field: &str, reason: impl std::fmt::Display) -> RunError {
        RunError::Config(format!("field `{field}`: {reason}"))
    }

    /// Core errors raised while building or running an experiment come from
    /// the configured parameters.
    pub fn from_core_config(e: slicedice_core::Error) -> RunError {
        match e {
            slicedice_core::Error::InvalidParameter { field, reason } => RunError::config(field, reason),
            other => RunError::Config(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Internal(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<slicedice_core::Error> for RunError {
    fn from(e: slicedice_core::Error) -> Self {
        RunError::from_core_config(e)
    }
}

/// Overrides taken from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

/// What an experiment produces. An internal failure is reported after the
/// files are written.
#[derive(Clone, Debug)]
pub struct Report {
    pub summary: Json,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub internal_failure: Option<String>,
}

impl Report {
    pub fn csv(&self) -> Result<String, RunError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| RunError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, out: &Path) -> Result<(), RunError> {
        fs::create_dir_all(out)?;
        fs::write(out.join("summary.json"), self.summary_json())?;
        fs::write(out.join("detail.csv"), self.csv()?)?;
        Ok(())
    }
}

/// Worker count: flag, then environment, then config, then all cores.
pub fn resolve_workers(cfg: &Config, opts: &RunOptions) -> Result<usize, RunError> {
    if let Some(w) = opts.workers {
        return if w == 0 { Err(RunError::config("workers", "must be positive")) } else { Ok(w) };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(RunError::config("workers", format!("{WORKERS_ENV} must be a positive integer"))),
        };
    }
    Ok(cfg.raw.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from)))
}

/// Runs the experiment on a dedicated thread pool without writing files.
pub fn evaluate(cfg: &Config, opts: &RunOptions) -> Result<Report, RunError> {
    let workers = resolve_workers(cfg, opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    let seed = opts.seed.unwrap_or_else(|| cfg.seed());
    pool.install(|| experiments::run(cfg, seed))
}

/// Runs the experiment and writes its report into `out`.
pub fn run(cfg: &Config, out: &Path, opts: &RunOptions) -> Result<Report, RunError> {
    finish(evaluate(cfg, opts)?, out)
}

/// Writes the report, then surfaces any internal failure as an error.
pub fn finish(report: Report, out: &Path) -> Result<Report, RunError> {
    report.write(out)?;
    match &report.internal_failure {
        Some(msg) => Err(RunError::Internal(msg.clone())),
        None => Ok(report),
    }
}

pub fn list_experiments() -> String {
    EXPERIMENTS.iter().map(|(name, what)| format!("{name:<20} {what}\n")).collect()
}
