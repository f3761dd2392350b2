//! Command-line front end: CSV ingestion, the bundled hospital-stay
//! dataset, scenario configs, and report emission.

pub mod config;
pub mod csv_io;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use medpool::dive::DiveError;
use medpool::model::{Method, PooledResult, ValidationError};
use medpool::qe::{QeError, QeModel};
use medpool::sim::{self, SimError};
use thiserror::Error;

pub use csv_io::{format_study_csv, parse_study_csv, parse_study_csv_str, ParsedStudies};
pub use report::{CiChoice, OutputFormat};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("CSV header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("--workers: {0}")]
    Workers(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Dive(#[from] DiveError),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Options of the `pool` subcommand.
#[derive(Debug, Clone)]
pub struct PoolOptions {
    /// Study table; `None` uses the bundled hospital-stay dataset.
    pub input: Option<PathBuf>,
    pub method: Method,
    pub alpha: f64,
    pub ci: CiChoice,
    pub format: OutputFormat,
}

/// Rendered output of a `pool` run, with warnings kept separate so they
/// can go to stderr without touching the machine-readable stream.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub rendered: String,
    pub warnings: Vec<String>,
}

fn pool_records(records: &[medpool::StudyRecord], method: Method, alpha: f64) -> Result<PooledResult, CliError> {
    Ok(match method {
        Method::Dive => medpool::dive::analyze(records, alpha)?,
        Method::QeRe => medpool::qe::pool(records, QeModel::RandomEffect, alpha)?,
        Method::QeFe => medpool::qe::pool(records, QeModel::FixedEffect, alpha)?,
    })
}

/// Parses the study table, pools with the requested method, and renders
/// the result.
pub fn run_pool(options: &PoolOptions) -> Result<PoolOutput, CliError> {
    let parsed = match &options.input {
        Some(path) => parse_study_csv(path)?,
        None => parse_study_csv_str(csv_io::ESD_HOSPITAL_STAY_CSV)?,
    };
    let result = pool_records(&parsed.records, options.method, options.alpha)?;
    let mut warnings = parsed.warnings;
    warnings.extend(result.warnings.iter().cloned());
    let rendered = report::render_pooled(&result, options.format, options.ci, options.alpha);
    Ok(PoolOutput { rendered, warnings })
}

/// Output files written by a `simulate` run.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub metrics_path: PathBuf,
    pub errors_path: PathBuf,
    pub report: sim::MetricsReport,
}

/// Runs the design cell described by the config file and writes
/// `metrics.csv` (aggregate, one row per method) and
/// `replicate_errors.csv` (per-replicate relative errors) into `out_dir`.
///
/// `workers` caps the rayon pool; any worker count produces byte-identical
/// files for the same config.
pub fn run_simulate(
    config_path: &Path,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<SimulateOutput, CliError> {
    let content = fs::read_to_string(config_path).map_err(|e| CliError::Io {
        path: config_path.display().to_string(),
        message: e.to_string(),
    })?;
    let scenario = config::parse_scenario_config(&content)?;

    let report = match workers {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Workers(e.to_string()))?
            .install(|| sim::run_scenario(&scenario)),
        None => sim::run_scenario(&scenario),
    }?;

    fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let metrics_path = out_dir.join("metrics.csv");
    let errors_path = out_dir.join("replicate_errors.csv");
    let write = |path: &Path, content: String| -> Result<(), CliError> {
        fs::write(path, content).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    write(&metrics_path, report::metrics_csv(&report))?;
    write(&errors_path, report::replicate_errors_csv(&report))?;
    Ok(SimulateOutput { metrics_path, errors_path, report })
}
