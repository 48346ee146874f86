use std::path::PathBuf;

use ats_core::calibration::{calibrate_surface, CalibrationResult, Family};
use ats_core::market::io::{read_chain, read_curve, write_chain, write_curve, write_forwards};
use ats_core::market::{discount_factor, moneyness, prepare_chain, MarketSlice, SyntheticForward};
use ats_core::models::{LtsParams, PowerLawParams, SatoParams, TemperedStableSlice};
use ats_core::pricing::{implied_vol, lewis_calls, put_from_parity, OptionSide, QuadratureConfig};
use ats_core::scaling::{moment_term_structure, rescale, scaling_analysis, MomentTermStructure, ScalingAnalysis};
use ats_core::synthetic::{synthetic_chain, SurfaceModel, SurfaceSpec};
use serde::{Deserialize, Serialize};

use crate::config::{read_text, Settings};
use crate::error::CliError;
use crate::output::{write_rows, Meta, OutputDir};

pub const FORWARDS_FILE: &str = "forwards.csv";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const SCALING_FILE: &str = "scaling.json";
pub const SCALING_K_FILE: &str = "scaling_k.csv";
pub const SCALING_ETA_FILE: &str = "scaling_eta.csv";
pub const MOMENTS_FILE: &str = "moments.csv";
pub const PRICES_FILE: &str = "prices.csv";
pub const CHAIN_FILE: &str = "chain.csv";
pub const CURVE_FILE: &str = "curve.csv";

fn output(s: &Settings, command: &str) -> Result<OutputDir, CliError> {
    OutputDir::create(s.out_dir(), Meta::new(command, s.hash(command)))
}

fn load_market(s: &Settings) -> Result<Vec<MarketSlice>, CliError> {
    let chain_path = s.require("chain", s.chain.clone())?;
    let quotes = read_chain(read_text(&chain_path)?.as_bytes())?;
    if quotes.is_empty() {
        return Err(CliError::EmptyInput(chain_path));
    }
    let curve_path = s.require("curve", s.curve.clone())?;
    let curve = read_curve(read_text(&curve_path)?.as_bytes())?;
    Ok(prepare_chain(&quotes, &curve, s.spot()?)?)
}

pub fn forwards(s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let market = load_market(s)?;
    let forwards: Vec<SyntheticForward> = market.iter().map(|m| m.forward.clone()).collect();
    for f in &forwards {
        eprintln!(
            "T={:<8} forward {:.6} [{:.6}, {:.6}] used {} discarded {:?}",
            f.expiry,
            f.fwd_mid,
            f.fwd_bid,
            f.fwd_ask,
            f.used_strikes.len(),
            f.discarded_strikes
        );
    }
    let mut out = output(s, "forwards")?;
    out.csv(FORWARDS_FILE, |buf| Ok(write_forwards(buf, &forwards)?))?;
    Ok(out.written)
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationDoc {
    result: CalibrationResult,
}

fn run_calibration(s: &Settings) -> Result<CalibrationResult, CliError> {
    let (alpha, family, cfg) = (s.alpha()?, s.family()?, s.optimizer()?);
    let market = load_market(s)?;
    let result = calibrate_surface(&market, family, alpha, &cfg, &QuadratureConfig::default())?;
    eprintln!(
        "{} alpha={} slices={} failures={} mse={:.6e} mape={:.6e} conditions_valid={}",
        result.model,
        alpha,
        result.slices.len(),
        result.failures.len(),
        result.mse,
        result.mape,
        result.conditions.valid
    );
    Ok(result)
}

pub fn calibrate(s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let result = run_calibration(s)?;
    let mut out = output(s, "calibrate")?;
    out.json(CALIBRATION_FILE, &CalibrationDoc { result })?;
    Ok(out.written)
}

#[derive(Serialize)]
struct ScalingDoc {
    model: Family,
    alpha: f64,
    analysis: ScalingAnalysis,
    moments: Option<MomentTermStructure>,
}

#[derive(Serialize)]
struct PlotRow {
    expiry_yf: f64,
    ln_theta: f64,
    ln_value: f64,
    se_ln_theta: f64,
    se_ln_value: f64,
    fitted: f64,
}

pub fn scaling(s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let result = match &s.calibration {
        Some(path) => {
            let doc: CalibrationDoc = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Core(ats_core::Error::Input(format!("{}: {e}", path.display()))))?;
            doc.result
        }
        None => run_calibration(s)?,
    };
    let usable = result.slices.iter().filter(|f| f.covariance.is_some()).count();
    if usable < 3 {
        return Err(CliError::Insufficient(format!(
            "scaling needs at least 3 calibrated slices with a covariance, got {usable}"
        )));
    }
    let with_cov = CalibrationResult {
        slices: result
            .slices
            .iter()
            .filter(|f| f.covariance.is_some())
            .cloned()
            .collect(),
        ..result.clone()
    };
    let points = rescale(&with_cov)?;
    let analysis = scaling_analysis(&points)?;
    let moments = match moment_term_structure(&with_cov) {
        Ok(m) => Some(m),
        Err(e) => {
            eprintln!("moment term structure unavailable: {e}");
            None
        }
    };
    eprintln!(
        "beta={:.6} (p={:.4}) delta={:.6} (p={:.4}) constant-eta p={:.3e}",
        analysis.fit_k.slope, analysis.p_beta, analysis.fit_eta.slope, analysis.p_delta, analysis.p_constant_eta
    );

    let plot = |ln_y: fn(&ats_core::scaling::RescaledPoint) -> (f64, f64), fit: &ats_core::scaling::ScalingFit| {
        points
            .iter()
            .map(|p| {
                let (y, var_y) = ln_y(p);
                PlotRow {
                    expiry_yf: p.expiry,
                    ln_theta: p.theta.ln(),
                    ln_value: y,
                    se_ln_theta: p.var_ln_theta.sqrt(),
                    se_ln_value: var_y.sqrt(),
                    fitted: fit.intercept + fit.slope * p.theta.ln(),
                }
            })
            .collect::<Vec<_>>()
    };
    let k_rows = plot(|p| (p.k_hat.ln(), p.var_ln_k), &analysis.fit_k);
    let eta_rows = plot(|p| (p.eta_hat.ln(), p.var_ln_eta), &analysis.fit_eta);

    let mut out = output(s, "scaling")?;
    out.csv(SCALING_K_FILE, |b| write_rows(b, &k_rows))?;
    out.csv(SCALING_ETA_FILE, |b| write_rows(b, &eta_rows))?;
    if let Some(m) = &moments {
        out.csv(MOMENTS_FILE, |b| write_rows(b, &m.points))?;
    }
    out.json(
        SCALING_FILE,
        &ScalingDoc {
            model: result.model,
            alpha: result.alpha,
            analysis,
            moments,
        },
    )?;
    Ok(out.written)
}

#[derive(Serialize)]
struct PriceRow {
    strike: f64,
    moneyness: f64,
    call: f64,
    put: f64,
    implied_vol: String,
}

pub fn price(s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let t = s.require("expiry", s.expiry)?;
    let slice = TemperedStableSlice::new(
        t,
        s.alpha()?,
        s.require("sigma", s.sigma)?,
        s.require("k", s.k)?,
        s.eta.unwrap_or(0.0),
    )?;
    let forward = s.require("forward", s.forward)?;
    let discount = match (s.discount, &s.curve) {
        (Some(b), _) => b,
        (None, Some(path)) => discount_factor(&read_curve(read_text(path)?.as_bytes())?, t)?,
        (None, None) => 1.0,
    };
    if !(forward > 0.0 && discount > 0.0 && discount <= 1.0) {
        return Err(CliError::Config(format!(
            "need forward > 0 and discount in (0, 1], got {forward} and {discount}"
        )));
    }
    let strikes = s.require("strikes", s.strikes.clone())?;
    if strikes.is_empty() {
        return Err(CliError::Config("empty strike list".into()));
    }
    if let Some(k) = strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(CliError::Config(format!("strikes must be positive, got {k}")));
    }
    let calls = lewis_calls(&slice, forward, discount, &strikes, &QuadratureConfig::default())?;
    let rows: Vec<PriceRow> = strikes
        .iter()
        .zip(&calls)
        .map(|(&strike, &call)| {
            let put = put_from_parity(call, forward, discount, strike);
            // out-of-the-money side carries the time value
            let (side, p) = if strike >= forward {
                (OptionSide::Call, call)
            } else {
                (OptionSide::Put, put)
            };
            let iv =
                implied_vol(p, forward, strike, t, discount, side).map_or_else(|_| "NA".to_string(), |v| v.to_string());
            PriceRow {
                strike,
                moneyness: moneyness(strike, forward),
                call,
                put,
                implied_vol: iv,
            }
        })
        .collect();
    let mut out = output(s, "price")?;
    out.csv(PRICES_FILE, |b| write_rows(b, &rows))?;
    Ok(out.written)
}

pub fn synth(s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let alpha = s.alpha()?;
    let sigma = s.sigma_bar.unwrap_or(0.2);
    let k = s.k_bar.unwrap_or(1.0);
    let eta = s.eta_bar.unwrap_or(1.0);
    let model = match s.family()? {
        Family::Ats => SurfaceModel::PowerLaw(PowerLawParams::new(
            alpha,
            sigma,
            k,
            eta,
            s.beta.unwrap_or(1.0),
            s.delta.unwrap_or(-0.5),
        )?),
        Family::Lts => SurfaceModel::Lts(LtsParams::new(alpha, sigma, k, eta)?),
        Family::Sato => SurfaceModel::Sato(SatoParams::new(alpha, sigma, k, eta, s.gamma.unwrap_or(0.5))?),
    };
    let d = SurfaceSpec::default();
    let spec = SurfaceSpec {
        spot: s.spot.unwrap_or(d.spot),
        rate: s.rate.unwrap_or(d.rate),
        expiries: s.expiries.clone().unwrap_or(d.expiries),
        noise: s.noise.unwrap_or(d.noise),
        seed: s.seed.unwrap_or(d.seed),
        ..d
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let quotes = synthetic_chain(&model, &spec)?;
    let curve = spec.curve()?;
    let mut out = output(s, "synth")?;
    out.csv(CHAIN_FILE, |b| Ok(write_chain(b, &quotes)?))?;
    out.csv(CURVE_FILE, |b| Ok(write_curve(b, &curve)?))?;
    eprintln!("{} quotes over {} expiries", quotes.len(), spec.expiries.len());
    Ok(out.written)
}
