use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use medpool::model::Method;
use medpool_cli::{csv_io, CiChoice, CliError, OutputFormat, PoolOptions};

#[derive(Parser)]
#[command(
    name = "medpool",
    version,
    about = "Meta-analysis of two-group median differences",
    long_about = "Pools study-level median differences. The dive method needs only \
                  medians and group sizes; qe-re and qe-fe additionally require \
                  quartiles in both groups. The simulate subcommand reproduces the \
                  Monte Carlo evaluation grid."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dive,
    QeRe,
    QeFe,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Method {
        match arg {
            MethodArg::Dive => Method::Dive,
            MethodArg::QeRe => Method::QeRe,
            MethodArg::QeFe => Method::QeFe,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CiArg {
    Z,
    T,
    Both,
}

impl From<CiArg> for CiChoice {
    fn from(arg: CiArg) -> CiChoice {
        match arg {
            CiArg::Z => CiChoice::Z,
            CiArg::T => CiChoice::T,
            CiArg::Both => CiChoice::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> OutputFormat {
        match arg {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pool study-level median differences from a study table.
    Pool {
        /// Study CSV (header: study_id,n1,median1,q1_1,q3_1,n2,median2,q1_2,q3_2;
        /// NA for missing). Defaults to the bundled hospital-stay dataset.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Two-sided level of the intervals.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Interval flavor shown in text output (machine formats carry both).
        #[arg(long, value_enum, default_value = "both")]
        ci: CiArg,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Run one Monte Carlo design cell from a config file.
    Simulate {
        /// Flat key=value scenario config; the seed is required.
        #[arg(long)]
        config: PathBuf,
        /// Directory for metrics.csv and replicate_errors.csv.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores). Output is identical for
        /// any worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the bundled hospital-stay dataset as CSV.
    Dataset {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Pool { input, method, alpha, ci, format } => {
            let options = PoolOptions {
                input,
                method: method.into(),
                alpha,
                ci: ci.into(),
                format: format.into(),
            };
            let output = medpool_cli::run_pool(&options)?;
            for warning in &output.warnings {
                eprintln!("warning: {warning}");
            }
            print!("{}", output.rendered);
            Ok(())
        }
        Command::Simulate { config, out, workers } => {
            let result = medpool_cli::run_simulate(&config, &out, workers)?;
            eprintln!(
                "wrote {} and {} ({} replicates)",
                result.metrics_path.display(),
                result.errors_path.display(),
                result.report.replicates
            );
            Ok(())
        }
        Command::Dataset { out } => match out {
            Some(path) => std::fs::write(&path, csv_io::ESD_HOSPITAL_STAY_CSV).map_err(|e| {
                CliError::Io { path: path.display().to_string(), message: e.to_string() }
            }),
            None => {
                print!("{}", csv_io::ESD_HOSPITAL_STAY_CSV);
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "error: {err}");
            ExitCode::FAILURE
        }
    }
}
