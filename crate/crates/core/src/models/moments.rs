use super::slice::TemperedStableSlice;
use crate::error::{Error, Result};

/// n-th derivative at 0 of `w ↦ ln L_t(w; k, α)`:
/// `−t · Π_{j=1}^{n−1}(α − j) · (k/(1−α))^{n−1}`.
fn log_laplace_derivative(n: u32, t: f64, k: f64, alpha: f64) -> f64 {
    let rate = k / (1.0 - alpha);
    let mut d = -t;
    for j in 1..n {
        d *= (alpha - j as f64) * rate;
    }
    d
}

/// n-th cumulant (`n = 1..=4`) of the forward exponent `f_t`.
///
/// The cumulant generating function is `ln L_t(m(s)) + s·φ_t t` with
/// `m(s) = (1/2 + η)σ² s − σ² s²/2`; derivatives follow from the chain rule
/// for a quadratic inner function.
pub fn cumulant(slice: &TemperedStableSlice, order: u32) -> Result<f64> {
    let (t, k, a) = (slice.t(), slice.k(), slice.alpha());
    let s2 = slice.sigma() * slice.sigma();
    let m1 = (0.5 + slice.eta()) * s2;
    let m2 = -s2;
    let d = |n| log_laplace_derivative(n, t, k, a);
    let value = match order {
        1 => d(1) * m1 + slice.drift(),
        2 => d(2) * m1 * m1 + d(1) * m2,
        3 => d(3) * m1.powi(3) + 3.0 * d(2) * m1 * m2,
        4 => d(4) * m1.powi(4) + 6.0 * d(3) * m1 * m1 * m2 + 3.0 * d(2) * m2 * m2,
        _ => {
            return Err(Error::InvalidParameter {
                name: "order",
                value: order as f64,
                reason: "cumulant order must be in 1..=4",
            })
        }
    };
    Ok(value)
}

pub fn skewness(slice: &TemperedStableSlice) -> f64 {
    let c2 = cumulant(slice, 2).unwrap();
    let c3 = cumulant(slice, 3).unwrap();
    c3 / c2.powf(1.5)
}

pub fn excess_kurtosis(slice: &TemperedStableSlice) -> f64 {
    let c2 = cumulant(slice, 2).unwrap();
    let c4 = cumulant(slice, 4).unwrap();
    c4 / (c2 * c2)
}

/// Closed-form skewness
///
/// ```text
/// −(3σ⁴(η+½)k t + c_α σ⁶(η+½)³k² t) / (σ² t + k t σ⁴ (η+½)²)^{3/2}
/// ```
///
/// with `c_α = (2−α)/(1−α)`: 3 for the inverse Gaussian (NIG) clock, 2 for
/// the gamma (VG) clock.
pub fn skewness_closed_form(slice: &TemperedStableSlice) -> f64 {
    let (t, k, a) = (slice.t(), slice.k(), slice.alpha());
    let s = slice.sigma();
    let h = slice.eta() + 0.5;
    let c = (2.0 - a) / (1.0 - a);
    let num = 3.0 * s.powi(4) * h * k * t + c * s.powi(6) * h.powi(3) * k * k * t;
    let den = (s * s * t + k * t * s.powi(4) * h * h).powf(1.5);
    -num / den
}
