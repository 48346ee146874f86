//! Calibration of Lévy (global), Sato (global) and additive (slice by slice)
//! normal tempered stable models to option quotes.
//!
//! The objective is the sum of squared differences between model prices and
//! quote mids. Additive slices are fitted in increasing maturity; candidates
//! that break the existence conditions against the previous slice pay an
//! exterior penalty.

mod covariance;
mod optim;

pub use covariance::{jacobian, param_covariance, sandwich_covariance, spread_variance, FD_MIN_STEP, FD_RELATIVE_STEP};
pub use optim::{differential_evolution, nelder_mead, nelder_mead_with_steps, OptimResult, OptimizerConfig};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{MarketSlice, OptionQuote};
use crate::models::{
    check_existence, pair_shortfall, pair_violations, CharacteristicFunction, ConditionReport, LtsParams, SatoParams,
    TemperedStableSlice, Violation,
};
use crate::pricing::{implied_vol, lewis_prices, OptionSide, OptionSpec, QuadratureConfig};

/// Weight of squared existence-condition shortfalls in the slice objective.
pub const PENALTY_WEIGHT: f64 = 1e6;
const PENALTY_ESCALATION: f64 = 100.0;
const MAX_ESCALATIONS: usize = 3;

pub const SIGMA_BOUNDS: (f64, f64) = (0.01, 2.0);
pub const K_BOUNDS: (f64, f64) = (1e-4, 50.0);
pub const ETA_BOUNDS: (f64, f64) = (-5.0, 20.0);
pub const GAMMA_BOUNDS: (f64, f64) = (1e-3, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "LTS")]
    Lts,
    #[serde(rename = "SATO")]
    Sato,
    #[serde(rename = "ATS")]
    Ats,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lts => "LTS",
            Family::Sato => "SATO",
            Family::Ats => "ATS",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LTS" | "LEVY" => Ok(Family::Lts),
            "SATO" => Ok(Family::Sato),
            "ATS" | "ADDITIVE" => Ok(Family::Ats),
            _ => Err(Error::Input(format!(
                "unknown model family `{s}` (expected LTS, SATO or ATS)"
            ))),
        }
    }
}

/// One expiry's quotes with the market data needed to price them.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceData<'a> {
    pub expiry: f64,
    pub forward: f64,
    pub discount: f64,
    pub quotes: &'a [OptionQuote],
}

impl<'a> From<&'a MarketSlice> for SliceData<'a> {
    fn from(m: &'a MarketSlice) -> Self {
        Self {
            expiry: m.expiry,
            forward: m.forward.fwd_mid,
            discount: m.discount,
            quotes: &m.quotes,
        }
    }
}

impl SliceData<'_> {
    fn specs(&self) -> Result<Vec<OptionSpec>> {
        self.quotes
            .iter()
            .map(|q| OptionSpec::new(self.expiry, q.strike, q.side))
            .collect()
    }
}

/// Model prices of every quote in the slice.
pub fn model_prices<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    data: &SliceData<'_>,
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    lewis_prices(cf, data.forward, data.discount, &data.specs()?, q)
}

/// `Σ (model − mid)²` over the slice quotes.
pub fn objective<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    data: &SliceData<'_>,
    q: &QuadratureConfig,
) -> Result<f64> {
    let prices = model_prices(cf, data, q)?;
    Ok(prices.iter().zip(data.quotes).map(|(p, o)| (p - o.mid()).powi(2)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitMetrics {
    pub sse: f64,
    pub mse: f64,
    pub mape: f64,
    pub n_quotes: usize,
}

impl FitMetrics {
    fn from_residuals(prices: &[f64], quotes: &[OptionQuote]) -> Self {
        let n = quotes.len();
        let mut sse = 0.0;
        let mut ape = 0.0;
        for (p, q) in prices.iter().zip(quotes) {
            let mid = q.mid();
            sse += (p - mid).powi(2);
            ape += (p - mid).abs() / mid;
        }
        let nf = n.max(1) as f64;
        Self {
            sse,
            mse: sse / nf,
            mape: ape / nf,
            n_quotes: n,
        }
    }

    fn combine(parts: &[FitMetrics]) -> Self {
        let n: usize = parts.iter().map(|m| m.n_quotes).sum();
        let sse: f64 = parts.iter().map(|m| m.sse).sum();
        let ape: f64 = parts.iter().map(|m| m.mape * m.n_quotes as f64).sum();
        let nf = n.max(1) as f64;
        Self {
            sse,
            mse: sse / nf,
            mape: ape / nf,
            n_quotes: n,
        }
    }
}

/// Calibrated maturity slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFit {
    pub expiry: f64,
    pub forward: f64,
    pub discount: f64,
    pub slice: TemperedStableSlice,
    /// Covariance over `(k_T, σ_T², η_T)`; `None` when the Jacobian is rank deficient.
    pub covariance: Option<[[f64; 3]; 3]>,
    pub metrics: FitMetrics,
    /// Existence-condition penalty at the optimum (zero when satisfied).
    pub penalty: f64,
    /// Conditions still violated against the previous slice.
    pub violations: Vec<Violation>,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum GlobalParams {
    #[serde(rename = "LTS")]
    Lts(LtsParams),
    #[serde(rename = "SATO")]
    Sato(SatoParams),
}

impl GlobalParams {
    pub fn slice(&self, t: f64) -> Result<TemperedStableSlice> {
        match self {
            GlobalParams::Lts(p) => p.slice(t),
            GlobalParams::Sato(p) => p.slice(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFit {
    pub params: GlobalParams,
    /// Covariance over `(k, σ², η)` and, for Sato, `γ`.
    pub covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFailure {
    pub expiry: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: Family,
    pub alpha: f64,
    pub global: Option<GlobalFit>,
    pub slices: Vec<SliceFit>,
    pub mse: f64,
    pub mape: f64,
    pub n_quotes: usize,
    pub conditions: ConditionReport,
    pub failures: Vec<SliceFailure>,
    pub diagnostics: Diagnostics,
}

impl CalibrationResult {
    pub fn tempered_slices(&self) -> Vec<TemperedStableSlice> {
        self.slices.iter().map(|s| s.slice).collect()
    }
}

fn to_array3(m: &DMatrix<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

/// `(ln σ, ln k, η)` → slice, clamped to the parameter box.
fn slice_from_x(t: f64, alpha: f64, x: &[f64]) -> Result<TemperedStableSlice> {
    let sigma = x[0].exp().clamp(SIGMA_BOUNDS.0, SIGMA_BOUNDS.1);
    let k = x[1].exp().clamp(K_BOUNDS.0, K_BOUNDS.1);
    let eta = x[2].clamp(ETA_BOUNDS.0, ETA_BOUNDS.1);
    TemperedStableSlice::new(t, alpha, sigma, k, eta)
}

fn penalty(prev: Option<&TemperedStableSlice>, s: &TemperedStableSlice, weight: f64) -> f64 {
    prev.map_or(0.0, |p| {
        weight * pair_shortfall(p, s).iter().map(|d| d * d).sum::<f64>()
    })
}

/// Black volatility of the quote nearest the forward, a starting point for `σ`.
fn atm_vol(data: &SliceData<'_>) -> f64 {
    data.quotes
        .iter()
        .min_by(|a, b| {
            (a.strike - data.forward)
                .abs()
                .total_cmp(&(b.strike - data.forward).abs())
        })
        .and_then(|q| implied_vol(q.mid(), data.forward, q.strike, data.expiry, data.discount, q.side).ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(0.2)
        .clamp(SIGMA_BOUNDS.0, SIGMA_BOUNDS.1)
}

/// Covariance of `(k, σ², η)` for one slice at its optimum, from the
/// quote spreads of `data`.
pub fn slice_covariance(s: &TemperedStableSlice, data: &SliceData<'_>, q: &QuadratureConfig) -> Result<[[f64; 3]; 3]> {
    let theta = [s.k(), s.sigma() * s.sigma(), s.eta()];
    let jac = jacobian(
        |p| {
            let c = TemperedStableSlice::new(s.t(), s.alpha(), p[1].max(0.0).sqrt(), p[0].max(0.0), p[2])?;
            model_prices(&c, data, q)
        },
        &theta,
    )?;
    let var: Vec<f64> = data.quotes.iter().map(|o| spread_variance(o.bid, o.ask)).collect();
    Ok(to_array3(&param_covariance(&jac, &var)?))
}

/// Fit `(σ_T, k_T, η_T)` of one maturity with `α` fixed.
///
/// Starts from the best points of a coarse grid (plus `prev`), runs the
/// simplex from each and restarts the best once. With `prev`, violations of
/// the existence conditions are penalized; the penalty weight is escalated
/// while violations remain.
pub fn calibrate_slice(
    data: &SliceData<'_>,
    alpha: f64,
    prev: Option<&TemperedStableSlice>,
    cfg: &OptimizerConfig,
    q: &QuadratureConfig,
) -> Result<SliceFit> {
    cfg.validate()?;
    q.validate()?;
    if data.quotes.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: data.quotes.len(),
        });
    }
    if !(data.expiry > 0.0 && data.forward > 0.0 && data.discount > 0.0) {
        return Err(Error::Input(format!(
            "slice needs positive expiry, forward and discount (T={}, F={}, B={})",
            data.expiry, data.forward, data.discount
        )));
    }
    TemperedStableSlice::new(data.expiry, alpha, 0.2, 0.0, 0.0)?;
    let t = data.expiry;

    let mut evaluations = 0usize;
    let mut weight = PENALTY_WEIGHT;
    let total = |x: &[f64], weight: f64, evals: &mut usize| -> f64 {
        *evals += 1;
        match slice_from_x(t, alpha, x) {
            Ok(s) => match objective(&s, data, q) {
                Ok(v) => v + penalty(prev, &s, weight),
                Err(_) => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    };

    let sigma0 = atm_vol(data);
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if let Some(p) = prev {
        candidates.push(vec![p.sigma().ln(), p.k().max(K_BOUNDS.0).ln(), p.eta()]);
    }
    for &s in &[0.8 * sigma0, sigma0] {
        for &k in &[0.01, 0.1, 1.0, 10.0] {
            for &eta in &[-0.4, 0.0, 1.0, 4.0] {
                candidates.push(vec![s.ln(), f64::ln(k), eta]);
            }
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .map(|x| (total(&x, weight, &mut evaluations), x))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let steps = [0.1, 0.5, 0.5];
    let mut best: Option<OptimResult> = None;
    let mut converged = false;
    for (_, x0) in scored.iter().take(cfg.restarts).filter(|(f, _)| f.is_finite()) {
        let r = nelder_mead_with_steps(|x| total(x, weight, &mut evaluations), x0, &steps, cfg);
        if best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(r);
        }
    }
    let mut best =
        best.ok_or_else(|| Error::Domain(format!("no admissible starting point for the slice at T = {t}")))?;
    // fresh simplex around the best point guards against premature collapse
    let small = [0.02, 0.1, 0.1];
    let r = nelder_mead_with_steps(|x| total(x, weight, &mut evaluations), &best.x, &small, cfg);
    if r.f <= best.f {
        best = r;
    }
    converged |= best.converged;

    let mut fitted = slice_from_x(t, alpha, &best.x)?;
    if let Some(p) = prev {
        for _ in 0..MAX_ESCALATIONS {
            if pair_violations(p, &fitted).is_empty() {
                break;
            }
            weight *= PENALTY_ESCALATION;
            let r = nelder_mead_with_steps(|x| total(x, weight, &mut evaluations), &best.x, &small, cfg);
            best = r;
            converged = best.converged;
            fitted = slice_from_x(t, alpha, &best.x)?;
        }
    }

    let prices = model_prices(&fitted, data, q)?;
    let metrics = FitMetrics::from_residuals(&prices, data.quotes);
    let violations = prev.map_or_else(Vec::new, |p| pair_violations(p, &fitted));
    Ok(SliceFit {
        expiry: t,
        forward: data.forward,
        discount: data.discount,
        slice: fitted,
        covariance: slice_covariance(&fitted, data, q).ok(),
        metrics,
        penalty: penalty(prev, &fitted, weight),
        violations,
        converged,
        evaluations,
    })
}

/// Calibrate a whole surface.
///
/// `Lts` and `Sato` fit one parameter vector to all expiries by differential
/// evolution; `Ats` calibrates each slice in increasing maturity, passing the
/// previous fit as the constraint anchor. Slices that fail are reported in
/// `failures` and skipped.
pub fn calibrate_surface(
    market: &[MarketSlice],
    family: Family,
    alpha: f64,
    cfg: &OptimizerConfig,
    q: &QuadratureConfig,
) -> Result<CalibrationResult> {
    cfg.validate()?;
    q.validate()?;
    let mut ordered: Vec<&MarketSlice> = market.iter().collect();
    ordered.sort_by(|a, b| a.expiry.total_cmp(&b.expiry));
    let data: Vec<SliceData<'_>> = ordered.into_iter().map(SliceData::from).collect();
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    match family {
        Family::Ats => calibrate_additive(&data, alpha, cfg, q),
        Family::Lts | Family::Sato => calibrate_global(&data, family, alpha, cfg, q),
    }
}

fn calibrate_additive(
    data: &[SliceData<'_>],
    alpha: f64,
    cfg: &OptimizerConfig,
    q: &QuadratureConfig,
) -> Result<CalibrationResult> {
    let mut fits: Vec<SliceFit> = Vec::new();
    let mut failures = Vec::new();
    for d in data {
        let prev = fits.last().map(|f| f.slice);
        match calibrate_slice(d, alpha, prev.as_ref(), cfg, q) {
            Ok(fit) => fits.push(fit),
            Err(e @ Error::InvalidParameter { .. }) => return Err(e),
            Err(e) => failures.push(SliceFailure {
                expiry: d.expiry,
                error: e.to_string(),
            }),
        }
    }
    if fits.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let metrics = FitMetrics::combine(&fits.iter().map(|f| f.metrics).collect::<Vec<_>>());
    let slices: Vec<TemperedStableSlice> = fits.iter().map(|f| f.slice).collect();
    let diagnostics = Diagnostics {
        evaluations: fits.iter().map(|f| f.evaluations).sum(),
        iterations: 0,
        converged: fits.iter().all(|f| f.converged),
    };
    Ok(CalibrationResult {
        model: Family::Ats,
        alpha,
        global: None,
        conditions: check_existence(&slices),
        slices: fits,
        mse: metrics.mse,
        mape: metrics.mape,
        n_quotes: metrics.n_quotes,
        failures,
        diagnostics,
    })
}

fn global_from_x(family: Family, alpha: f64, x: &[f64]) -> Result<GlobalParams> {
    let (sigma, k, eta) = (x[0].exp(), x[1].exp(), x[2]);
    Ok(match family {
        Family::Lts => GlobalParams::Lts(LtsParams::new(alpha, sigma, k, eta)?),
        Family::Sato => GlobalParams::Sato(SatoParams::new(alpha, sigma, k, eta, x[3])?),
        Family::Ats => unreachable!("additive model is calibrated slice by slice"),
    })
}

/// Global parameters in natural coordinates `(k, σ², η[, γ])`.
fn natural(params: &GlobalParams) -> Vec<f64> {
    match params {
        GlobalParams::Lts(p) => vec![p.k, p.sigma * p.sigma, p.eta],
        GlobalParams::Sato(p) => vec![p.k, p.sigma * p.sigma, p.eta, p.gamma],
    }
}

fn from_natural(family: Family, alpha: f64, th: &[f64]) -> Result<GlobalParams> {
    let sigma = th[1].max(0.0).sqrt();
    Ok(match family {
        Family::Lts => GlobalParams::Lts(LtsParams::new(alpha, sigma, th[0].max(0.0), th[2])?),
        Family::Sato => GlobalParams::Sato(SatoParams::new(alpha, sigma, th[0].max(0.0), th[2], th[3])?),
        Family::Ats => unreachable!("additive model is calibrated slice by slice"),
    })
}

/// `∂(k_T, σ_T², η_T)/∂(natural global parameters)` at maturity `t`.
fn slice_jacobian(params: &GlobalParams, t: f64) -> DMatrix<f64> {
    match params {
        GlobalParams::Lts(_) => DMatrix::identity(3, 3),
        GlobalParams::Sato(p) => {
            let s2 = p.sigma * p.sigma;
            let lt = t.ln();
            let scale_s = t.powf(2.0 * p.gamma - 1.0);
            let scale_e = t.powf(-p.gamma);
            DMatrix::from_row_slice(
                3,
                4,
                &[
                    t,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    scale_s,
                    0.0,
                    2.0 * s2 * scale_s * lt,
                    0.0,
                    0.0,
                    scale_e,
                    -(0.5 + p.eta) * scale_e * lt,
                ],
            )
        }
    }
}

fn calibrate_global(
    data: &[SliceData<'_>],
    family: Family,
    alpha: f64,
    cfg: &OptimizerConfig,
    q: &QuadratureConfig,
) -> Result<CalibrationResult> {
    LtsParams::new(alpha, 0.2, 1.0, 0.0)?;
    let usable: Vec<&SliceData<'_>> = data.iter().filter(|d| !d.quotes.is_empty()).collect();
    let n_quotes: usize = usable.iter().map(|d| d.quotes.len()).sum();
    let dim = if family == Family::Sato { 4 } else { 3 };
    if n_quotes < dim + 1 {
        return Err(Error::InsufficientData {
            needed: dim + 1,
            got: n_quotes,
        });
    }

    let total = |x: &[f64]| -> f64 {
        let Ok(params) = global_from_x(family, alpha, x) else {
            return f64::INFINITY;
        };
        let mut sum = 0.0;
        for d in &usable {
            let v = params.slice(d.expiry).and_then(|s| objective(&s, d, q));
            match v {
                Ok(v) => sum += v,
                Err(_) => return f64::INFINITY,
            }
        }
        sum
    };
    let mut bounds = vec![
        (SIGMA_BOUNDS.0.ln(), SIGMA_BOUNDS.1.ln()),
        (K_BOUNDS.0.ln(), K_BOUNDS.1.ln()),
        ETA_BOUNDS,
    ];
    if family == Family::Sato {
        bounds.push(GAMMA_BOUNDS);
    }
    let opt = differential_evolution(total, &bounds, cfg)?;
    let params = global_from_x(family, alpha, &opt.x)?;

    let theta = natural(&params);
    let all_prices = |th: &[f64]| -> Result<Vec<f64>> {
        let p = from_natural(family, alpha, th)?;
        let mut out = Vec::with_capacity(n_quotes);
        for d in &usable {
            out.extend(model_prices(&p.slice(d.expiry)?, d, q)?);
        }
        Ok(out)
    };
    let variances: Vec<f64> = usable
        .iter()
        .flat_map(|d| d.quotes.iter().map(|o| spread_variance(o.bid, o.ask)))
        .collect();
    let global_cov = jacobian(all_prices, &theta)
        .and_then(|j| param_covariance(&j, &variances))
        .ok();

    let mut fits = Vec::new();
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for d in data {
        let s = params.slice(d.expiry)?;
        if d.quotes.is_empty() {
            failures.push(SliceFailure {
                expiry: d.expiry,
                error: "no quotes after filtering".into(),
            });
            continue;
        }
        let prices = model_prices(&s, d, q)?;
        let metrics = FitMetrics::from_residuals(&prices, d.quotes);
        parts.push(metrics);
        let covariance = global_cov.as_ref().map(|c| {
            let j = slice_jacobian(&params, d.expiry);
            to_array3(&(&j * c * j.transpose()))
        });
        fits.push(SliceFit {
            expiry: d.expiry,
            forward: d.forward,
            discount: d.discount,
            slice: s,
            covariance,
            metrics,
            penalty: 0.0,
            violations: Vec::new(),
            converged: opt.converged,
            evaluations: 0,
        });
    }
    let metrics = FitMetrics::combine(&parts);
    let slices: Vec<TemperedStableSlice> = fits.iter().map(|f| f.slice).collect();
    Ok(CalibrationResult {
        model: family,
        alpha,
        global: Some(GlobalFit {
            params,
            covariance: global_cov.map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect()),
        }),
        conditions: check_existence(&slices),
        slices: fits,
        mse: metrics.mse,
        mape: metrics.mape,
        n_quotes: metrics.n_quotes,
        failures,
        diagnostics: Diagnostics {
            evaluations: opt.evaluations,
            iterations: opt.iterations,
            converged: opt.converged,
        },
    })
}

/// Quotes of one side only, handy for tests and diagnostics.
pub fn quotes_of_side(quotes: &[OptionQuote], side: OptionSide) -> Vec<OptionQuote> {
    quotes.iter().filter(|q| q.side == side).copied().collect()
}
