mod config;
mod figures;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pseudomode_core::dynamics::{CONVERGENCE_TOL, NORM_GROWTH_TOL, POSITIVITY_TOL, TRACE_DRIFT_TOL};
use pseudomode_core::observables::{DEFAULT_ESD_THRESHOLD, X_FORM_TOL};
use pseudomode_core::sweep::threads_from_env;
use serde::Serialize;
use serde_json::Value;

use config::{Overrides, RunConfig};
use figures::FigureId;
use scenarios::Output;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("PSEUDOMODE_GIT_DESCRIBE"), ")");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pseudomode_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_input() => 2,
            CliError::Core(e) if e.is_convergence() => 4,
            CliError::Core(_) | CliError::CheckFailed(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

/// Two qubits in an intensely disturbed Lorentzian bath, simulated with
/// damped pseudo-modes.
#[derive(Parser)]
#[command(name = "pseudomode", version = VERSION)]
struct Cli {
    /// JSON configuration; command-line values override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bath spectra, undisturbed and disturbed, on a frequency grid.
    Spectrum,
    /// Centers, widths and weights of the two disturbed peaks.
    Decompose,
    /// Master-equation evolution of the reduced qubit state.
    Evolve,
    /// Survival probability of the initial state.
    Survival,
    /// Data bundle for one figure layout.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureId,
    },
    /// Brute-force checks of the engineered spectrum and the master equation.
    OracleCheck,
    /// Death time and final values over a parameter grid.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Decompose => "decompose",
            Command::Evolve => "evolve",
            Command::Survival => "survival",
            Command::Reproduce { .. } => "reproduce",
            Command::OracleCheck => "oracle-check",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Serialize)]
struct Tolerances {
    trace_drift: f64,
    positivity: f64,
    norm_growth: f64,
    x_form: f64,
    esd_threshold: f64,
    convergence: f64,
}

const TOLERANCES: Tolerances = Tolerances {
    trace_drift: TRACE_DRIFT_TOL,
    positivity: POSITIVITY_TOL,
    norm_growth: NORM_GROWTH_TOL,
    x_form: X_FORM_TOL,
    esd_threshold: DEFAULT_ESD_THRESHOLD,
    convergence: CONVERGENCE_TOL,
};

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    scenario: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<FigureId>,
    config: &'a RunConfig,
    tolerances: &'a Tolerances,
    files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Value::is_null")]
    results: Value,
}

#[derive(Serialize)]
struct FileEntry {
    file: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    panel: Value,
}

fn write_bundle(
    dir: &Path,
    meta_name: &str,
    scenario: &str,
    figure: Option<FigureId>,
    cfg: &RunConfig,
    tables: Vec<(String, output::Table, Value)>,
    results: Value,
) -> Result<(), CliError> {
    output::ensure_dir(dir)?;
    let mut files = Vec::new();
    for (name, table, panel) in tables {
        table.write(&dir.join(&name))?;
        files.push(FileEntry { file: name, panel });
    }
    let meta = Metadata {
        version: VERSION,
        scenario,
        figure,
        config: cfg,
        tolerances: &TOLERANCES,
        files,
        results,
    };
    output::write_json(&dir.join(meta_name), &meta)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let Format::Csv = cli.format;
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let threads = threads_from_env()?;
    let scenario = cli.command.name();
    let simple = |out: Output| {
        let stem = out.tables[0].0.trim_end_matches(".csv").to_string();
        let tables = out.tables.into_iter().map(|(n, t)| (n, t, Value::Null)).collect();
        write_bundle(&cli.out, &format!("{stem}.json"), scenario, None, &cfg, tables, out.results)
    };
    match cli.command {
        Command::Spectrum => simple(scenarios::spectrum(&cfg)?),
        Command::Decompose => simple(scenarios::decompose(&cfg)?),
        Command::Evolve => simple(scenarios::evolve(&cfg)?),
        Command::Survival => simple(scenarios::survival(&cfg)?),
        Command::Sweep => simple(scenarios::run_sweep(&cfg, threads)?),
        Command::OracleCheck => {
            let (out, pass) = scenarios::oracle_check(&cfg)?;
            simple(out)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed("oracle check failed".into()))
            }
        }
        Command::Reproduce { figure } => {
            let panels = figures::reproduce(figure, &cfg, threads)?;
            let tables = panels.into_iter().map(|p| (p.file, p.table, p.description)).collect();
            let dir = cli.out.join(figure.name());
            write_bundle(&dir, "metadata.json", scenario, Some(figure), &cfg, tables, Value::Null)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
