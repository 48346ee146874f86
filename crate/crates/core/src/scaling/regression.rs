//! Straight-line fits with Gaussian coefficient covariances.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// York iterations stop when the slope moves less than this.
pub const YORK_TOL: f64 = 1e-12;
pub const YORK_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub var_slope: f64,
    pub var_intercept: f64,
    pub cov_slope_intercept: f64,
    /// Null value used for `p_value_slope_null`.
    pub slope_null: f64,
    pub p_value_slope_null: f64,
    /// Two-sided test of a zero intercept.
    pub p_value_intercept_null: f64,
    /// Delta-method test that `exp(intercept)` is zero.
    pub p_value_scale_zero: f64,
    /// Weighted residual sum of squares over `n − 2`.
    pub residual_variance: f64,
    pub n_points: usize,
    pub iterations: usize,
}

impl ScalingFit {
    #[allow(clippy::too_many_arguments)]
    fn new(
        slope: f64,
        intercept: f64,
        var_slope: f64,
        var_intercept: f64,
        cov: f64,
        chi2: f64,
        n: usize,
        iterations: usize,
    ) -> Self {
        let mut fit = Self {
            slope,
            intercept,
            var_slope: var_slope.max(0.0),
            var_intercept: var_intercept.max(0.0),
            cov_slope_intercept: cov,
            slope_null: 0.0,
            p_value_slope_null: f64::NAN,
            p_value_intercept_null: f64::NAN,
            p_value_scale_zero: f64::NAN,
            residual_variance: chi2 / (n as f64 - 2.0),
            n_points: n,
            iterations,
        };
        fit.p_value_slope_null = test_slope(&fit, 0.0);
        fit.p_value_intercept_null = test_intercept(&fit, 0.0);
        // z = e^a / (e^a · se(a))
        fit.p_value_scale_zero = p_value(1.0, fit.var_intercept.sqrt());
        fit
    }

    /// Same fit with the slope test against `null`.
    pub fn with_slope_null(mut self, null: f64) -> Self {
        self.slope_null = null;
        self.p_value_slope_null = test_slope(&self, null);
        self
    }
}

/// Two-sided Gaussian p-value of an estimate deviation `diff` with standard error `se`.
pub fn p_value(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        return 1.0;
    }
    if !(se > 0.0) {
        return 0.0;
    }
    erfc((diff / se).abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub fn test_slope(fit: &ScalingFit, null: f64) -> f64 {
    p_value(fit.slope - null, fit.var_slope.sqrt())
}

pub fn test_intercept(fit: &ScalingFit, null: f64) -> f64 {
    p_value(fit.intercept - null, fit.var_intercept.sqrt())
}

fn check_lengths(n: usize, others: &[usize]) -> Result<()> {
    if others.iter().any(|&m| m != n) {
        return Err(Error::Input("regression inputs have different lengths".into()));
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    Ok(())
}

/// Weighted least squares line `y = a + b x` with covariance `(Z'WZ)⁻¹`.
pub fn wls_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<ScalingFit> {
    check_lengths(x.len(), &[y.len(), weights.len()])?;
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::Input("weights must be positive and finite".into()));
    }
    let sw: f64 = weights.iter().sum();
    let xbar = weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = weights.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = weights.iter().zip(x).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = weights
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    if !(sxx > 1e-14 * sw * (1.0 + xbar * xbar)) {
        return Err(Error::RankDeficient);
    }
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    let var_b = 1.0 / sxx;
    let var_a = 1.0 / sw + xbar * xbar * var_b;
    let chi2 = chi_square(x, y, weights, a, b);
    Ok(ScalingFit::new(b, a, var_b, var_a, -xbar * var_b, chi2, x.len(), 0))
}

fn chi_square(x: &[f64], y: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - a - b * x).powi(2))
        .sum()
}

/// York (2004) straight-line fit with Gaussian errors in both coordinates,
/// of variances `var_x`, `var_y` and correlation `corr`.
pub fn york_fit(x: &[f64], y: &[f64], var_x: &[f64], var_y: &[f64], corr: &[f64]) -> Result<ScalingFit> {
    let n = x.len();
    check_lengths(n, &[y.len(), var_x.len(), var_y.len(), corr.len()])?;
    for i in 0..n {
        if !(var_x[i] >= 0.0 && var_y[i] >= 0.0 && var_x[i] + var_y[i] > 0.0) {
            return Err(Error::Input(format!(
                "point {i}: variances must be non-negative and not both zero"
            )));
        }
        if !(corr[i].abs() <= 1.0) {
            return Err(Error::Input(format!(
                "point {i}: correlation {} outside [-1, 1]",
                corr[i]
            )));
        }
    }
    let sx: Vec<f64> = var_x.iter().map(|v| v.sqrt()).collect();
    let sy: Vec<f64> = var_y.iter().map(|v| v.sqrt()).collect();

    let init_w: Vec<f64> = var_y
        .iter()
        .zip(var_x)
        .map(|(vy, vx)| 1.0 / if *vy > 0.0 { *vy } else { *vx })
        .collect();
    let mut b = wls_fit(x, y, &init_w)?.slope;

    let state = |b: f64| -> Result<(Vec<f64>, f64, f64, Vec<f64>)> {
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let d = var_y[i] + b * b * var_x[i] - 2.0 * b * corr[i] * sx[i] * sy[i];
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::Domain(format!("degenerate York weight at point {i}")))
                }
            })
            .collect::<Result<_>>()?;
        let sw: f64 = w.iter().sum();
        let xbar = (0..n).map(|i| w[i] * x[i]).sum::<f64>() / sw;
        let ybar = (0..n).map(|i| w[i] * y[i]).sum::<f64>() / sw;
        let beta: Vec<f64> = (0..n)
            .map(|i| {
                let (u, v) = (x[i] - xbar, y[i] - ybar);
                w[i] * (u * var_y[i] + b * v * var_x[i] - (b * u + v) * corr[i] * sx[i] * sy[i])
            })
            .collect();
        Ok((w, xbar, ybar, beta))
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < YORK_MAX_ITER {
        iterations += 1;
        let (w, xbar, ybar, beta) = state(b)?;
        let num: f64 = (0..n).map(|i| w[i] * beta[i] * (y[i] - ybar)).sum();
        let den: f64 = (0..n).map(|i| w[i] * beta[i] * (x[i] - xbar)).sum();
        if den == 0.0 {
            return Err(Error::RankDeficient);
        }
        let next = num / den;
        let step = (next - b).abs();
        b = next;
        if step < YORK_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }

    let (w, xbar, ybar, beta) = state(b)?;
    let a = ybar - b * xbar;
    let sw: f64 = w.iter().sum();
    let adj: Vec<f64> = beta.iter().map(|bi| xbar + bi).collect();
    let adj_bar = (0..n).map(|i| w[i] * adj[i]).sum::<f64>() / sw;
    let suu: f64 = (0..n).map(|i| w[i] * (adj[i] - adj_bar).powi(2)).sum();
    if !(suu > 0.0) {
        return Err(Error::RankDeficient);
    }
    let var_b = 1.0 / suu;
    let var_a = 1.0 / sw + adj_bar * adj_bar * var_b;
    let chi2 = chi_square(x, y, &w, a, b);
    Ok(ScalingFit::new(
        b,
        a,
        var_b,
        var_a,
        -adj_bar * var_b,
        chi2,
        n,
        iterations,
    ))
}
