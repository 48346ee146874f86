//! European option pricing from a characteristic function (Lewis contour
//! integral), Black-76 and implied volatility.
//!
//! With `x = ln(K/F)` the undiscounted call is
//!
//! ```text
//! C = F · (1 − e^{x/2}/π ∫_0^∞ Re[e^{izx} φ(−z − i/2)] / (z² + 1/4) dz)
//! ```
//!
//! The integrand is analytic in a strip around the real axis, so a plain
//! trapezoid rule converges geometrically in the node spacing.

mod black;

pub use black::{black_price, implied_vol, BlackCf, INTRINSIC_CLAMP};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::CharacteristicFunction;

/// Integrand envelope that must be reached at the truncation point.
pub const TAIL_TOL: f64 = 1e-12;
/// Contributions below this are dropped once the integrand has decayed.
const NEGLIGIBLE: f64 = 1e-17;
/// Truncation (and node count) may be doubled this many times.
const MAX_DOUBLINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionSide {
    #[serde(rename = "C")]
    Call,
    #[serde(rename = "P")]
    Put,
}

impl OptionSide {
    pub fn code(self) -> char {
        match self {
            OptionSide::Call => 'C',
            OptionSide::Put => 'P',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub expiry: f64,
    pub strike: f64,
    pub side: OptionSide,
}

impl OptionSpec {
    pub fn new(expiry: f64, strike: f64, side: OptionSide) -> Result<Self> {
        if !(expiry > 0.0 && expiry.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "expiry",
                value: expiry,
                reason: "must be positive",
            });
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "strike",
                value: strike,
                reason: "must be positive",
            });
        }
        Ok(Self { expiry, strike, side })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureScheme {
    /// Geometric convergence for this integrand; the default.
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial upper limit of the `z` integration.
    pub truncation: f64,
    /// Initial number of panels on `[0, truncation]`.
    pub nodes: usize,
    pub scheme: QuadratureScheme,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            truncation: 200.0,
            nodes: 2048,
            scheme: QuadratureScheme::Trapezoid,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "truncation",
                value: self.truncation,
                reason: "must be positive",
            });
        }
        if self.nodes < 64 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                value: self.nodes as f64,
                reason: "at least 64 nodes required",
            });
        }
        Ok(())
    }
}

/// CF values on the contour, pre-multiplied by quadrature weights and the
/// `1/(z² + 1/4)` kernel. Shared by all strikes of one expiry.
struct Contour {
    step: f64,
    weighted: Vec<Complex64>,
}

fn contour_cf<C: CharacteristicFunction + ?Sized>(cf: &C, z: f64) -> Result<Complex64> {
    cf.cf(Complex64::new(-z, -0.5))
}

fn sample_contour<C: CharacteristicFunction + ?Sized>(cf: &C, q: &QuadratureConfig) -> Result<Contour> {
    q.validate()?;
    let mut zmax = q.truncation;
    let mut nodes = q.nodes;
    let mut tail = f64::NAN;
    for doubling in 0..=MAX_DOUBLINGS {
        if doubling > 0 {
            zmax *= 2.0;
            nodes *= 2;
        }
        tail = contour_cf(cf, zmax)?.norm() / (zmax * zmax + 0.25);
        if tail < TAIL_TOL {
            return build_contour(cf, zmax, nodes, q.scheme);
        }
    }
    Err(Error::QuadratureDivergence {
        truncation: zmax,
        magnitude: tail,
    })
}

fn build_contour<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    zmax: f64,
    mut nodes: usize,
    scheme: QuadratureScheme,
) -> Result<Contour> {
    if scheme == QuadratureScheme::Simpson && nodes % 2 == 1 {
        nodes += 1;
    }
    let step = zmax / nodes as f64;
    let mut weighted = Vec::with_capacity(nodes + 1);
    for i in 0..=nodes {
        let z = i as f64 * step;
        let kernel = contour_cf(cf, z)? / (z * z + 0.25);
        if i > 0 && kernel.norm() < NEGLIGIBLE {
            break;
        }
        let w = match scheme {
            QuadratureScheme::Trapezoid if i == 0 || i == nodes => 0.5 * step,
            QuadratureScheme::Trapezoid => step,
            QuadratureScheme::Simpson if i == 0 || i == nodes => step / 3.0,
            QuadratureScheme::Simpson if i % 2 == 1 => 4.0 * step / 3.0,
            QuadratureScheme::Simpson => 2.0 * step / 3.0,
        };
        weighted.push(kernel * w);
    }
    Ok(Contour { step, weighted })
}

impl Contour {
    /// `∫_0^Z Re[e^{izx} φ(−z − i/2)] / (z² + 1/4) dz`
    fn integral(&self, x: f64) -> f64 {
        let rot = Complex64::from_polar(1.0, self.step * x);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut sum = 0.0;
        for (i, g) in self.weighted.iter().enumerate() {
            if i % 256 == 0 {
                // re-anchor the recurrence to bound round-off growth
                phase = Complex64::from_polar(1.0, i as f64 * self.step * x);
            }
            sum += (phase * g).re;
            phase *= rot;
        }
        sum
    }

    fn call(&self, forward: f64, discount: f64, strike: f64) -> Result<f64> {
        let x = (strike / forward).ln();
        let raw = discount * forward * (1.0 - (0.5 * x).exp() * self.integral(x) / std::f64::consts::PI);
        clamp_call(raw, forward, discount, strike)
    }
}

fn clamp_call(price: f64, forward: f64, discount: f64, strike: f64) -> Result<f64> {
    let lower = discount * (forward - strike).max(0.0);
    let upper = discount * forward;
    if !price.is_finite() {
        return Err(Error::Domain(format!("non-finite Lewis price at strike {strike}")));
    }
    if price < lower {
        if lower - price <= INTRINSIC_CLAMP * upper.max(1.0) {
            return Ok(lower);
        }
        return Err(Error::PriceOutOfBounds { price, lower, upper });
    }
    if price > upper {
        if price - upper <= INTRINSIC_CLAMP * upper.max(1.0) {
            return Ok(upper);
        }
        return Err(Error::PriceOutOfBounds { price, lower, upper });
    }
    Ok(price)
}

fn check_market(forward: f64, discount: f64) -> Result<()> {
    if !(forward > 0.0 && forward.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "forward",
            value: forward,
            reason: "must be positive",
        });
    }
    if !(discount > 0.0 && discount.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "discount",
            value: discount,
            reason: "must be positive",
        });
    }
    Ok(())
}

/// Discounted call price for one strike.
pub fn lewis_call<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    forward: f64,
    discount: f64,
    strike: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    Ok(lewis_calls(cf, forward, discount, &[strike], q)?[0])
}

/// Discounted call prices for several strikes of the same expiry; the CF is
/// sampled once.
pub fn lewis_calls<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    forward: f64,
    discount: f64,
    strikes: &[f64],
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_market(forward, discount)?;
    if let Some(&k) = strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidParameter {
            name: "strike",
            value: k,
            reason: "must be positive",
        });
    }
    let contour = sample_contour(cf, q)?;
    strikes.iter().map(|&k| contour.call(forward, discount, k)).collect()
}

/// Discounted prices of calls and puts of one expiry (puts by parity).
pub fn lewis_prices<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    forward: f64,
    discount: f64,
    options: &[OptionSpec],
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let strikes: Vec<f64> = options.iter().map(|o| o.strike).collect();
    let calls = lewis_calls(cf, forward, discount, &strikes, q)?;
    Ok(options
        .iter()
        .zip(calls)
        .map(|(o, c)| match o.side {
            OptionSide::Call => c,
            OptionSide::Put => put_from_parity(c, forward, discount, o.strike).max(0.0),
        })
        .collect())
}

/// Discounted price of a single option.
pub fn lewis_price<C: CharacteristicFunction + ?Sized>(
    cf: &C,
    forward: f64,
    discount: f64,
    spec: &OptionSpec,
    q: &QuadratureConfig,
) -> Result<f64> {
    Ok(lewis_prices(cf, forward, discount, std::slice::from_ref(spec), q)?[0])
}

pub fn put_from_parity(call: f64, forward: f64, discount: f64, strike: f64) -> f64 {
    call - discount * (forward - strike)
}

pub fn call_from_parity(put: f64, forward: f64, discount: f64, strike: f64) -> f64 {
    put + discount * (forward - strike)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogCfFn, TemperedStableSlice};

    #[test]
    fn gaussian_cf_matches_black() {
        let q = QuadratureConfig::default();
        let cf = BlackCf::new(0.2, 1.0);
        let p = lewis_call(&cf, 100.0, 1.0, 100.0, &q).unwrap();
        assert!((p / 7.965_567_455_405_797 - 1.0).abs() < 1e-10, "{p}");
        for &(k, t, s) in &[(80.0, 0.25, 0.3), (120.0, 2.0, 0.15), (100.0, 0.05, 0.1)] {
            let cf = BlackCf::new(s, t);
            let lewis = lewis_call(&cf, 100.0, 0.95, k, &q).unwrap();
            let exact = black_price(100.0, k, t, s, 0.95, OptionSide::Call);
            assert!((lewis / exact - 1.0).abs() < 1e-8, "K={k} T={t}: {lewis} vs {exact}");
        }
    }

    #[test]
    fn tiny_strike_approaches_discounted_forward() {
        let s = TemperedStableSlice::new(1.0, 0.5, 0.2, 1.0, 1.0).unwrap();
        let p = lewis_call(&s, 100.0, 0.9, 1e-6, &QuadratureConfig::default()).unwrap();
        assert!((p - 90.0).abs() < 1e-6);
    }

    #[test]
    fn bounds_monotonicity_and_convexity() {
        let q = QuadratureConfig::default();
        for &alpha in &[0.0, 0.5, 0.75] {
            let s = TemperedStableSlice::new(0.5, alpha, 0.2, 0.8, 2.0).unwrap();
            let strikes: Vec<f64> = (0..61).map(|i| 70.0 + i as f64).collect();
            let calls = lewis_calls(&s, 100.0, 0.98, &strikes, &q).unwrap();
            for (k, c) in strikes.iter().zip(&calls) {
                assert!(*c >= 0.98 * (100.0 - k).max(0.0) && *c <= 98.0);
            }
            for w in calls.windows(3) {
                assert!(w[1] <= w[0]);
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
            }
        }
    }

    #[test]
    fn doubling_nodes_is_converged() {
        let q = QuadratureConfig::default();
        let fine = QuadratureConfig {
            nodes: 2 * q.nodes,
            ..q
        };
        for &(t, alpha) in &[(0.1, 0.5), (1.0, 0.0), (2.0, 0.25)] {
            let s = TemperedStableSlice::new(t, alpha, 0.2, 0.5, 1.0).unwrap();
            let strikes = [70.0, 90.0, 100.0, 110.0, 140.0];
            let a = lewis_calls(&s, 100.0, 1.0, &strikes, &q).unwrap();
            let b = lewis_calls(&s, 100.0, 1.0, &strikes, &fine).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8, "T={t} alpha={alpha}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn simpson_agrees_with_trapezoid() {
        let s = TemperedStableSlice::new(0.5, 0.5, 0.25, 0.3, 0.5).unwrap();
        let trap = lewis_call(&s, 100.0, 1.0, 95.0, &QuadratureConfig::default()).unwrap();
        let simpson = QuadratureConfig {
            scheme: QuadratureScheme::Simpson,
            ..Default::default()
        };
        let simp = lewis_call(&s, 100.0, 1.0, 95.0, &simpson).unwrap();
        // Simpson mixes in the coarser 2h trapezoid, so it is the less accurate rule here
        assert!((trap - simp).abs() < 1e-5, "{trap} vs {simp}");
    }

    #[test]
    fn zero_skew_smile_is_symmetric() {
        let q = QuadratureConfig::default();
        for &alpha in &[0.0, 0.5] {
            let s = TemperedStableSlice::new(1.0, alpha, 0.2, 1.0, 0.0).unwrap();
            for i in 1..=6 {
                let x = 0.05 * i as f64;
                let (kp, km) = (100.0 * x.exp(), 100.0 * (-x).exp());
                let cp = lewis_call(&s, 100.0, 1.0, kp, &q).unwrap();
                let cm = lewis_call(&s, 100.0, 1.0, km, &q).unwrap();
                let vp = implied_vol(cp, 100.0, kp, 1.0, 1.0, OptionSide::Call).unwrap();
                let vm = implied_vol(cm, 100.0, km, 1.0, 1.0, OptionSide::Call).unwrap();
                assert!((vp - vm).abs() < 1e-4, "alpha={alpha} x={x}: {vp} vs {vm}");
            }
        }
    }

    #[test]
    fn parity_round_trip() {
        let c = 7.9656;
        assert_eq!(put_from_parity(c, 100.0, 1.0, 100.0), c);
        let p = put_from_parity(12.3, 101.0, 0.97, 95.0);
        assert!((call_from_parity(p, 101.0, 0.97, 95.0) - 12.3).abs() < 1e-12);
    }

    #[test]
    fn put_prices_follow_parity() {
        let s = TemperedStableSlice::new(0.5, 0.5, 0.2, 0.5, 1.0).unwrap();
        let q = QuadratureConfig::default();
        let opts = [
            OptionSpec::new(0.5, 95.0, OptionSide::Call).unwrap(),
            OptionSpec::new(0.5, 95.0, OptionSide::Put).unwrap(),
        ];
        let v = lewis_prices(&s, 100.0, 0.99, &opts, &q).unwrap();
        assert!((v[0] - v[1] - 0.99 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn slow_decay_reports_divergence() {
        let flat = LogCfFn(|_u: Complex64| Ok(Complex64::new(0.0, 0.0)));
        let err = lewis_call(&flat, 100.0, 1.0, 100.0, &QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::QuadratureDivergence { .. }));
    }

    #[test]
    fn short_dated_variance_gamma_converges() {
        // |φ| decays like |u|^{-2t/k} = |u|^{-1}
        let s = TemperedStableSlice::new(0.25, 0.0, 0.2, 0.5, 0.0).unwrap();
        let c = lewis_call(&s, 100.0, 1.0, 105.0, &QuadratureConfig::default()).unwrap();
        assert!(c > 0.0 && c < 5.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cf = BlackCf::new(0.2, 1.0);
        let q = QuadratureConfig {
            nodes: 10,
            ..Default::default()
        };
        assert!(lewis_call(&cf, 100.0, 1.0, 100.0, &q).is_err());
        assert!(OptionSpec::new(0.0, 100.0, OptionSide::Call).is_err());
    }
}
