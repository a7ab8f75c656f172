//! Command-line front end: reads a scenario config, runs one analysis and
//! writes CSV and JSON artifacts.
//!
//! Exit codes: 0 success, 1 domain error (no phase match, wavelength out of
//! range, failed criteria), 2 usage or configuration error.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod repro;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Overrides, Scenario};
use output::Artifacts;

#[derive(Debug, Clone, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(#[from] spdc_core::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 2,
            Self::Domain(_) | Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spdc",
    version,
    about = "Design and analysis of two-crystal SPDC sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// RNG seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refractive indices, group indices and walk-off at the operating point.
    Index {
        /// Additional wavelengths to tabulate.
        #[arg(long = "wavelength-nm")]
        wavelength_nm: Vec<f64>,
    },
    /// Collinear signal/idler wavelengths.
    Pm {
        /// Fix the internal angle, bypassing angle tuning.
        #[arg(long)]
        theta_deg: Option<f64>,
    },
    /// Signal and idler spectra for the configured and a monochromatic pump.
    Spectrum,
    /// Relative-phase maps before and after compensation.
    Phasemap,
    /// Compensator thicknesses that flatten the relative phase.
    Optimize,
    /// Spectrally averaged visibility with and without compensation.
    Visibility,
    /// Count rates against pump power.
    Simulate,
    /// Visibility ensembles, fidelity and coupling efficiency.
    Analyze,
    /// Spectral width against crystal length.
    ScanLength,
    /// Every acceptance number with a pass/fail table.
    Repro,
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <file> is required".into()))?;
    let mut overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        theta_deg: None,
    };
    if let Command::Pm { theta_deg } = &cli.command {
        overrides.theta_deg = *theta_deg;
    }
    if let Command::Repro = cli.command {
        let (ok, table) = repro::run_repro(config, &overrides, cli.out.as_deref())?;
        stdout.write_all(table.as_bytes()).ok();
        return Ok(if ok { 0 } else { 1 });
    }

    let scenario = Scenario::load(config, &overrides)?;
    let mut out = Artifacts::create(&scenario.out_dir)?;
    match &cli.command {
        Command::Index { wavelength_nm } => {
            commands::run_index(&scenario, &mut out, wavelength_nm)?
        }
        Command::Pm { .. } => commands::run_pm(&scenario, &mut out)?,
        Command::Spectrum => commands::run_spectrum(&scenario, &mut out)?,
        Command::Phasemap => commands::run_phasemap(&scenario, &mut out)?,
        Command::Optimize => commands::run_optimize(&scenario, &mut out)?,
        Command::Visibility => commands::run_visibility(&scenario, &mut out)?,
        Command::Simulate => commands::run_simulate(&scenario, &mut out)?,
        Command::Analyze => commands::run_analyze(&scenario, &mut out)?,
        Command::ScanLength => commands::run_scan(&scenario, &mut out)?,
        Command::Repro => unreachable!("handled above"),
    }
    for path in out.written() {
        writeln!(stdout, "{}", path.display()).ok();
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                stdout.write_all(rendered.as_bytes()).ok();
            } else {
                stderr.write_all(rendered.as_bytes()).ok();
            }
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            e.exit_code()
        }
    }
}
