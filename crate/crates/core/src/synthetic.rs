//! Synthetic option chains priced from a known model, for round trips,
//! fixtures and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DiscountCurve, OptionQuote, PENNY_FRACTION};
use crate::models::{power_law_slice, LtsParams, PowerLawParams, SatoParams, TemperedStableSlice};
use crate::pricing::{lewis_calls, put_from_parity, OptionSide, QuadratureConfig};

/// Model generating the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SurfaceModel {
    PowerLaw(PowerLawParams),
    Lts(LtsParams),
    Sato(SatoParams),
}

impl SurfaceModel {
    pub fn slice(&self, t: f64) -> Result<TemperedStableSlice> {
        match self {
            SurfaceModel::PowerLaw(p) => power_law_slice(t, p),
            SurfaceModel::Lts(p) => p.slice(t),
            SurfaceModel::Sato(p) => p.slice(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceSpec {
    pub spot: f64,
    /// Flat continuously compounded rate; no dividends, so `F = S e^{rT}`.
    pub rate: f64,
    pub expiries: Vec<f64>,
    pub strike_step: f64,
    /// Strikes span `|ln(K/F)| ≤ width · σ_T √T`.
    pub width: f64,
    /// Half-spread as a fraction of the price, floored at `min_half_spread`.
    pub spread_fraction: f64,
    pub min_half_spread: f64,
    /// Uniform mid noise in units of the half-spread (0 gives clean quotes).
    pub noise: f64,
    pub seed: u64,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self {
            spot: 1000.0,
            rate: 0.01,
            expiries: vec![0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0],
            strike_step: 10.0,
            width: 2.0,
            spread_fraction: 0.005,
            min_half_spread: 0.05,
            noise: 0.0,
            seed: 42,
        }
    }
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("spot", self.spot),
            ("strike_step", self.strike_step),
            ("width", self.width),
            ("min_half_spread", self.min_half_spread),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        if !(self.spread_fraction >= 0.0 && self.noise >= 0.0 && self.noise < 1.0) {
            return Err(Error::Input("spread fraction must be ≥ 0 and noise in [0, 1)".into()));
        }
        if self.expiries.is_empty() || self.expiries.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Input(
                "expiries must be a non-empty list of positive tenors".into(),
            ));
        }
        Ok(())
    }

    pub fn curve(&self) -> Result<DiscountCurve> {
        let horizon = self.expiries.iter().copied().fold(0.0, f64::max);
        DiscountCurve::flat(self.rate, horizon)
    }

    pub fn forward(&self, t: f64) -> f64 {
        self.spot * (self.rate * t).exp()
    }
}

/// Calls and puts on a strike grid for every expiry, quoted symmetrically
/// around the model price. Quotes below the penny threshold are omitted.
pub fn synthetic_chain(model: &SurfaceModel, spec: &SurfaceSpec) -> Result<Vec<OptionQuote>> {
    spec.validate()?;
    let q = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let penny = PENNY_FRACTION * spec.strike_step;
    let mut out = Vec::new();
    let mut expiries = spec.expiries.clone();
    expiries.sort_by(f64::total_cmp);
    expiries.dedup();
    for t in expiries {
        let slice = model.slice(t)?;
        let forward = spec.forward(t);
        let discount = (-spec.rate * t).exp();
        let half = spec.width * slice.sigma() * t.sqrt();
        let lo = (forward * (-half).exp() / spec.strike_step).ceil() as i64;
        let hi = (forward * half.exp() / spec.strike_step).floor() as i64;
        let strikes: Vec<f64> = (lo.max(1)..=hi).map(|i| i as f64 * spec.strike_step).collect();
        let calls = lewis_calls(&slice, forward, discount, &strikes, &q)?;
        for (&strike, &call) in strikes.iter().zip(&calls) {
            let put = put_from_parity(call, forward, discount, strike).max(0.0);
            for (side, price) in [(OptionSide::Call, call), (OptionSide::Put, put)] {
                let h = (spec.spread_fraction * price).max(spec.min_half_spread);
                let mid = price + spec.noise * h * rng.random_range(-1.0..1.0);
                if mid < penny || mid - h <= 0.0 {
                    continue;
                }
                out.push(OptionQuote::new(t, strike, side, mid - h, mid + h)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{liquidity_filter, prepare_chain, strike_step};

    fn model() -> SurfaceModel {
        SurfaceModel::PowerLaw(PowerLawParams::new(0.5, 0.2, 1.0, 1.0, 1.0, -0.5).unwrap())
    }

    #[test]
    fn chain_survives_filters_and_recovers_forwards() {
        let spec = SurfaceSpec {
            expiries: vec![0.25, 1.0],
            ..SurfaceSpec::default()
        };
        let quotes = synthetic_chain(&model(), &spec).unwrap();
        let step = strike_step(&quotes).unwrap();
        assert_eq!(step, 10.0);
        assert_eq!(liquidity_filter(&quotes, step).len(), quotes.len());
        let slices = prepare_chain(&quotes, &spec.curve().unwrap(), spec.spot).unwrap();
        assert_eq!(slices.len(), 2);
        for s in &slices {
            let f = spec.forward(s.expiry);
            assert!((s.forward.fwd_mid - f).abs() < 1e-6 * f, "{} vs {f}", s.forward.fwd_mid);
            assert!(s.forward.discarded_strikes.is_empty());
        }
    }

    #[test]
    fn noise_is_seeded() {
        let spec = SurfaceSpec {
            expiries: vec![0.5],
            noise: 0.5,
            ..SurfaceSpec::default()
        };
        let a = synthetic_chain(&model(), &spec).unwrap();
        let b = synthetic_chain(&model(), &spec).unwrap();
        assert_eq!(a, b);
        let c = synthetic_chain(&model(), &SurfaceSpec { seed: 7, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = SurfaceSpec {
            expiries: vec![],
            ..SurfaceSpec::default()
        };
        assert!(synthetic_chain(&model(), &spec).is_err());
    }
}
