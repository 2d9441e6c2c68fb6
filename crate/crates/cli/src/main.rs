//! `mzlab`: run interferometer experiments from JSON scenario files.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad scenario, override or input values: exit 1.
    #[error("{0}")]
    Validation(String),
    /// Anything that failed while running: exit 2.
    #[error("{0}")]
    Runtime(String),
}

impl From<mzlab::Error> for CliError {
    fn from(e: mzlab::Error) -> Self {
        use mzlab::Error as E;
        match e {
            E::Domain { .. } | E::UnsupportedOrder(_) | E::Invalid(_) | E::Json(_) | E::Csv(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mzlab", version, about = "Bragg Mach-Zehnder atom interferometer simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario JSON; every block has defaults.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Scenario override, dotted path: `--set gratings.order=2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Zeroth-order transmission versus mirror angle.
    DiffractScan,
    /// Count trace while translating the third mirror.
    Fringes,
    /// Visibility versus rotation of one mirror about the beam.
    TiltScan,
    /// Visibility versus the distance mismatch L23 - L12.
    MismatchScan,
    /// Mean intensity and visibility versus a slit width.
    SlitScan,
    /// Visibility revivals versus coil current.
    MagneticScan,
    /// Fit a CSV written by `fringes`, `tilt-scan`, `mismatch-scan` or `magnetic-scan`.
    Fit {
        /// CSV to fit; its header selects the model.
        #[arg(long)]
        input: PathBuf,
    },
    /// Standing-wave depths (and powers) for splitter and mirror pulses.
    DesignPulse,
    /// Write the constant table in use.
    Constants,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mzlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
