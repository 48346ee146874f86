use statrs::function::gamma::ln_gamma;

use super::slice::TemperedStableSlice;
use crate::error::{Error, Result};
use crate::special::bessel_k_scaled;

/// Lévy density `ν_t(x)` of the slice law:
///
/// ```text
/// ν_t(x) = t C / |x|^{1/2+α} · e^{−(η+1/2)x} · K_{α+1/2}(|x| ω)
/// C      = 2 / (Γ(1−α) √(2π)) · ((1−α)/k)^{1−α} · σ^{2α} · ω^{α+1/2}
/// ω      = sqrt((1/2+η)² + 2(1−α)/(k σ²))
/// ```
pub fn levy_density(x: f64, slice: &TemperedStableSlice) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("Lévy density undefined at x = {x}")));
    }
    let (t, a, k, s, eta) = (slice.t(), slice.alpha(), slice.k(), slice.sigma(), slice.eta());
    if k <= 0.0 {
        return Err(Error::Domain("Lévy density needs k > 0".into()));
    }
    let h = 0.5 + eta;
    let omega = (h * h + 2.0 * (1.0 - a) / (k * s * s)).sqrt();
    let ax = x.abs();

    let ln_c = std::f64::consts::LN_2 - ln_gamma(1.0 - a) - 0.5 * (2.0 * std::f64::consts::PI).ln()
        + (1.0 - a) * ((1.0 - a) / k).ln()
        + 2.0 * a * s.ln()
        + (a + 0.5) * omega.ln();
    // e^{−h x} K(|x|ω) = e^{−h x − ω|x|} · (e^{ω|x|} K(ω|x|)); exponent is ≤ 0 since ω > |h|
    let ln_rest = -(0.5 + a) * ax.ln() - h * x - omega * ax;
    Ok(t * (ln_c + ln_rest).exp() * bessel_k_scaled(a + 0.5, ax * omega))
}
