//! Run settings: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use ats_core::calibration::{Family, OptimizerConfig};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_OUT: &str = ".";

/// Every setting the commands understand. Flags and config-file keys share
/// these names; a flag given on the command line wins over the file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Option chain CSV (`expiry_yf,strike,side,bid,ask`).
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Discount curve CSV (`tenor_yf,discount_factor`).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Calibration JSON written by `ats calibrate`.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub spot: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// LTS, SATO or ATS.
    #[arg(long)]
    pub family: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub x_tolerance: Option<f64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,

    // slice pricing
    #[arg(long)]
    pub expiry: Option<f64>,
    #[arg(long)]
    pub forward: Option<f64>,
    #[arg(long)]
    pub discount: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub strikes: Option<Vec<f64>>,

    // synthetic surfaces
    #[arg(long)]
    pub sigma_bar: Option<f64>,
    #[arg(long)]
    pub k_bar: Option<f64>,
    #[arg(long)]
    pub eta_bar: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub expiries: Option<Vec<f64>>,

    /// TOML file with the same keys; explicit flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! layer {
    ($top:ident, $base:ident; $($field:ident),* $(,)?) => {
        Settings {
            $($field: $top.$field.or($base.$field),)*
            config: $top.config,
        }
    };
}

impl Settings {
    /// `self` over `base`, field by field.
    pub fn over(self, base: Settings) -> Settings {
        let top = self;
        layer!(top, base;
            chain, curve, calibration, spot, alpha, family, out, seed,
            max_iterations, tolerance, x_tolerance, population, generations, restarts,
            expiry, forward, discount, sigma, k, eta, strikes,
            sigma_bar, k_bar, eta_bar, beta, delta, gamma, rate, noise, expiries,
        )
    }

    /// Flags layered over the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Settings, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = read_text(&path)?;
        let file: Settings = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(self.over(file))
    }

    pub fn alpha(&self) -> Result<f64, CliError> {
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(0.0..1.0).contains(&alpha) {
            return Err(CliError::Config(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        Ok(alpha)
    }

    pub fn family(&self) -> Result<Family, CliError> {
        self.family
            .as_deref()
            .map_or(Ok(Family::Ats), str::parse)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn spot(&self) -> Result<f64, CliError> {
        let spot = self.require("spot", self.spot)?;
        if !(spot > 0.0 && spot.is_finite()) {
            return Err(CliError::Config(format!("spot must be positive, got {spot}")));
        }
        Ok(spot)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        let d = OptimizerConfig::default();
        let cfg = OptimizerConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            x_tolerance: self.x_tolerance.unwrap_or(d.x_tolerance),
            population: self.population.unwrap_or(d.population),
            generations: self.generations.unwrap_or(d.generations),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn require<T>(&self, name: &str, value: Option<T>) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Config(format!("missing required setting `{name}`")))
    }

    /// SHA-256 of the resolved settings, excluding the output location.
    pub fn hash(&self, command: &str) -> String {
        let mut s = self.clone();
        s.out = None;
        s.config = None;
        let json = serde_json::to_string(&s).expect("settings serialize");
        let digest = Sha256::new().chain_update(command).chain_update(json).finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::from_io(path, e))
}
