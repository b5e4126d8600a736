mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ptannulus::Error;

/// Spectra, PT thresholds and phase diagrams for 1/ρ² potentials on an annulus.
#[derive(Debug, Parser)]
#[command(name = "ptannulus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues α² of the angular operator.
    Spectrum(commands::SpectrumArgs),
    /// First PT-breaking strength along a term.
    Threshold(commands::ThresholdArgs),
    /// Flow of the lowest α² levels with increasing strength.
    Flow(commands::FlowArgs),
    /// max|Im α²| over a grid of two strengths.
    Phasemap(commands::PhasemapArgs),
    /// Probability density of one eigenmode.
    Density(commands::DensityArgs),
    /// Radial momenta κ and energies E = κ².
    Radial(commands::RadialArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(String),
    Io(String),
    Unconverged(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
            CliError::Unconverged(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Io(m) | CliError::Unconverged(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::NonMonotone { .. } | Error::NoCrossing { .. } => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn workers(command: &Command) -> Option<usize> {
    let common = match command {
        Command::Spectrum(a) => &a.common,
        Command::Threshold(a) => &a.common,
        Command::Flow(a) => &a.common,
        Command::Phasemap(a) => &a.common,
        Command::Density(a) => &a.common,
        Command::Radial(a) => &a.common,
    };
    common.resolve().ok().and_then(|c| c.workers)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = workers(&cli.command) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Flow(a) => commands::flow(a),
        Command::Phasemap(a) => commands::phasemap(a),
        Command::Density(a) => commands::density(a),
        Command::Radial(a) => commands::radial(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
