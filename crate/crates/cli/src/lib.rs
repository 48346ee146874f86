//! `ats` command-line pipeline: forwards, calibration, scaling analysis,
//! slice pricing and synthetic chains.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::Settings;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ats",
    version,
    about = "Tempered stable option pricing, calibration and scaling analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter the chain and build per-expiry synthetic forwards.
    Forwards(Settings),
    /// Calibrate a surface (LTS, SATO or ATS).
    Calibrate(Settings),
    /// Power-law scaling and moment analysis of a calibration.
    Scaling(Settings),
    /// Price one slice on a strike list.
    Price(Settings),
    /// Generate a synthetic chain and flat curve from a known model.
    Synth(Settings),
}

type Handler = fn(&Settings) -> Result<Vec<PathBuf>, CliError>;

pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (settings, f): (Settings, Handler) = match cli.command {
        Command::Forwards(s) => (s, commands::forwards),
        Command::Calibrate(s) => (s, commands::calibrate),
        Command::Scaling(s) => (s, commands::scaling),
        Command::Price(s) => (s, commands::price),
        Command::Synth(s) => (s, commands::synth),
    };
    f(&settings.resolve()?)
}
