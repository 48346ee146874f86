//! Scaling analysis of calibrated slices in the rescaled time `θ = T σ_T²`.
//!
//! With `k̂ = k_T σ_T²` the power-law hypothesis reads
//!
//! ```text
//! ln k̂ = ln k̄ + β ln θ        ln η̂ = ln η̄ + δ ln θ
//! ```
//!
//! Both lines are fitted with errors in both coordinates (York), using
//! first-order variances propagated from each slice's parameter covariance.

mod regression;

pub use regression::{p_value, test_intercept, test_slope, wls_fit, york_fit, ScalingFit};

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationResult;
use crate::error::{Error, Result};
use crate::models::{excess_kurtosis, skewness, TemperedStableSlice};

/// Null slope of `ln k̂` on `ln θ`.
pub const BETA_NULL: f64 = 1.0;
/// Null slope of `ln η̂` on `ln θ`.
pub const DELTA_NULL: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledPoint {
    pub expiry: f64,
    pub theta: f64,
    pub k_hat: f64,
    pub eta_hat: f64,
    pub var_ln_k: f64,
    pub var_ln_eta: f64,
    pub var_ln_theta: f64,
    pub corr_lnk_lntheta: f64,
}

/// Rescale one slice with covariance `cov` over `(k, σ², η)`.
pub fn rescale_slice(slice: &TemperedStableSlice, cov: &[[f64; 3]; 3]) -> Result<RescaledPoint> {
    let (t, k, s2, eta) = (slice.t(), slice.k(), slice.sigma() * slice.sigma(), slice.eta());
    if !(k > 0.0 && eta > 0.0) {
        return Err(Error::Domain(format!(
            "log-scale analysis needs k > 0 and eta > 0 (T = {t}: k = {k}, eta = {eta})"
        )));
    }
    let var_ln_theta = cov[1][1] / (s2 * s2);
    let cov_kt = cov[1][0] / (k * s2);
    let var_ln_k = (cov[0][0] / (k * k) + var_ln_theta + 2.0 * cov_kt).max(0.0);
    let var_ln_eta = cov[2][2] / (eta * eta);
    let cov_ln = var_ln_theta + cov_kt;
    let denom = (var_ln_k * var_ln_theta).sqrt();
    let corr = if denom > 0.0 {
        (cov_ln / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(RescaledPoint {
        expiry: t,
        theta: t * s2,
        k_hat: k * s2,
        eta_hat: eta,
        var_ln_k,
        var_ln_eta,
        var_ln_theta,
        corr_lnk_lntheta: corr,
    })
}

/// Rescaled points of every calibrated slice.
pub fn rescale(result: &CalibrationResult) -> Result<Vec<RescaledPoint>> {
    result
        .slices
        .iter()
        .map(|s| {
            let cov = s
                .covariance
                .ok_or_else(|| Error::Input(format!("slice at T = {} has no parameter covariance", s.expiry)))?;
            rescale_slice(&s.slice, &cov)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingAnalysis {
    pub points: Vec<RescaledPoint>,
    /// `ln k̂` on `ln θ`; slope null `β = 1`.
    pub fit_k: ScalingFit,
    /// `ln η̂` on `ln θ`; slope null `δ = −1/2`.
    pub fit_eta: ScalingFit,
    pub p_beta: f64,
    pub p_delta: f64,
    /// Intercept significance (`ln k̄ = 0`).
    pub p_k_bar_intercept: f64,
    /// Delta-method test of `k̄ = 0`.
    pub p_k_bar_zero: f64,
    pub p_eta_bar_intercept: f64,
    pub p_eta_bar_zero: f64,
    /// Test of a constant `η̂` (slope zero).
    pub p_constant_eta: f64,
}

fn ln_columns(points: &[RescaledPoint]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        points.iter().map(|p| p.theta.ln()).collect(),
        points.iter().map(|p| p.k_hat.ln()).collect(),
        points.iter().map(|p| p.eta_hat.ln()).collect(),
    )
}

fn check_points(points: &[RescaledPoint]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    Ok(())
}

fn eta_fit(points: &[RescaledPoint]) -> Result<ScalingFit> {
    check_points(points)?;
    let (lt, _, le) = ln_columns(points);
    let vx: Vec<f64> = points.iter().map(|p| p.var_ln_theta).collect();
    let vy: Vec<f64> = points.iter().map(|p| p.var_ln_eta).collect();
    york_fit(&lt, &le, &vx, &vy, &vec![0.0; points.len()])
}

/// Fit both scaling laws and run the slope and intercept tests.
pub fn scaling_analysis(points: &[RescaledPoint]) -> Result<ScalingAnalysis> {
    check_points(points)?;
    let (lt, lk, _) = ln_columns(points);
    let vx: Vec<f64> = points.iter().map(|p| p.var_ln_theta).collect();
    let vk: Vec<f64> = points.iter().map(|p| p.var_ln_k).collect();
    let rk: Vec<f64> = points.iter().map(|p| p.corr_lnk_lntheta).collect();
    let fit_k = york_fit(&lt, &lk, &vx, &vk, &rk)?.with_slope_null(BETA_NULL);
    let fit_eta = eta_fit(points)?.with_slope_null(DELTA_NULL);
    Ok(ScalingAnalysis {
        points: points.to_vec(),
        p_beta: fit_k.p_value_slope_null,
        p_delta: fit_eta.p_value_slope_null,
        p_k_bar_intercept: fit_k.p_value_intercept_null,
        p_k_bar_zero: fit_k.p_value_scale_zero,
        p_eta_bar_intercept: fit_eta.p_value_intercept_null,
        p_eta_bar_zero: fit_eta.p_value_scale_zero,
        p_constant_eta: test_slope(&fit_eta, 0.0),
        fit_k,
        fit_eta,
    })
}

/// p-value of a constant `η̂` in θ-time.
pub fn constant_eta_test(points: &[RescaledPoint]) -> Result<f64> {
    Ok(test_slope(&eta_fit(points)?, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub expiry: f64,
    pub sqrt_t: f64,
    pub skewness: f64,
    pub se_skewness: f64,
    pub excess_kurtosis: f64,
    pub se_excess_kurtosis: f64,
    /// Fitted line at `√T` and the half-width of its 95% band.
    pub skewness_line: f64,
    pub skewness_band: f64,
    pub kurtosis_line: f64,
    pub kurtosis_band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTermStructure {
    pub points: Vec<MomentPoint>,
    pub skewness_fit: ScalingFit,
    pub kurtosis_fit: ScalingFit,
    /// Two-sided test of no slope in `√T`.
    pub p_skewness_no_slope: f64,
    pub p_kurtosis_no_slope: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Standard error of `f(slice)` by the delta method over `(k, σ², η)`.
fn delta_method<F: Fn(&TemperedStableSlice) -> f64>(
    slice: &TemperedStableSlice,
    cov: &[[f64; 3]; 3],
    f: F,
) -> Result<f64> {
    let theta = [slice.k(), slice.sigma() * slice.sigma(), slice.eta()];
    let mut grad = [0.0; 3];
    for j in 0..3 {
        let h = (1e-5 * theta[j].abs()).max(1e-7);
        let eval = |d: f64| -> Result<f64> {
            let mut p = theta;
            p[j] += d;
            let s = TemperedStableSlice::new(slice.t(), slice.alpha(), p[1].sqrt(), p[0], p[2])?;
            Ok(f(&s))
        };
        grad[j] = (eval(h)? - eval(-h)?) / (2.0 * h);
    }
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    Ok(var.max(0.0).sqrt())
}

/// Regress per-slice skewness and excess kurtosis on `√T` with Gaussian
/// standard errors from the parameter covariances.
pub fn moment_term_structure(result: &CalibrationResult) -> Result<MomentTermStructure> {
    moment_term_structure_of(
        &result
            .slices
            .iter()
            .map(|s| {
                let cov = s
                    .covariance
                    .ok_or_else(|| Error::Input(format!("slice at T = {} has no parameter covariance", s.expiry)))?;
                Ok((s.slice, cov))
            })
            .collect::<Result<Vec<_>>>()?,
    )
}

/// As [`moment_term_structure`] on explicit slices and covariances.
pub fn moment_term_structure_of(slices: &[(TemperedStableSlice, [[f64; 3]; 3])]) -> Result<MomentTermStructure> {
    if slices.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: slices.len(),
        });
    }
    let mut x = Vec::new();
    let mut skew = Vec::new();
    let mut skew_se = Vec::new();
    let mut kurt = Vec::new();
    let mut kurt_se = Vec::new();
    for (s, cov) in slices {
        x.push(s.t().sqrt());
        skew.push(skewness(s));
        skew_se.push(delta_method(s, cov, skewness)?);
        kurt.push(excess_kurtosis(s));
        kurt_se.push(delta_method(s, cov, excess_kurtosis)?);
    }
    let weights = |se: &[f64]| -> Vec<f64> { se.iter().map(|s| 1.0 / (s * s)).collect() };
    let skewness_fit = wls_fit(&x, &skew, &weights(&skew_se))?;
    let kurtosis_fit = wls_fit(&x, &kurt, &weights(&kurt_se))?;
    let band = |f: &ScalingFit, x: f64| {
        let v = f.var_intercept + x * x * f.var_slope + 2.0 * x * f.cov_slope_intercept;
        Z95 * v.max(0.0).sqrt()
    };
    let points = slices
        .iter()
        .enumerate()
        .map(|(i, (s, _))| MomentPoint {
            expiry: s.t(),
            sqrt_t: x[i],
            skewness: skew[i],
            se_skewness: skew_se[i],
            excess_kurtosis: kurt[i],
            se_excess_kurtosis: kurt_se[i],
            skewness_line: skewness_fit.intercept + skewness_fit.slope * x[i],
            skewness_band: band(&skewness_fit, x[i]),
            kurtosis_line: kurtosis_fit.intercept + kurtosis_fit.slope * x[i],
            kurtosis_band: band(&kurtosis_fit, x[i]),
        })
        .collect();
    Ok(MomentTermStructure {
        points,
        p_skewness_no_slope: test_slope(&skewness_fit, 0.0),
        p_kurtosis_no_slope: test_slope(&kurtosis_fit, 0.0),
        skewness_fit,
        kurtosis_fit,
    })
}
