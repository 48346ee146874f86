use num_complex::Complex64;
use statrs::function::erf::erfc;

use super::OptionSide;
use crate::error::{Error, Result};
use crate::models::CharacteristicFunction;

/// Prices this far below intrinsic are treated as quadrature noise.
pub const INTRINSIC_CLAMP: f64 = 1e-9;

pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Log-normal forward exponent `f_T = −σ²T/2 + σ W_T`.
#[derive(Debug, Clone, Copy)]
pub struct BlackCf {
    pub total_variance: f64,
}

impl BlackCf {
    pub fn new(sigma: f64, t: f64) -> Self {
        Self {
            total_variance: sigma * sigma * t,
        }
    }
}

impl CharacteristicFunction for BlackCf {
    fn log_cf(&self, u: Complex64) -> Result<Complex64> {
        Ok(-(u * u + Complex64::i() * u) * (0.5 * self.total_variance))
    }
}

/// Black-76 price of a European option on a forward, discounted by `discount`.
pub fn black_price(forward: f64, strike: f64, t: f64, sigma: f64, discount: f64, side: OptionSide) -> f64 {
    let sd = sigma * t.max(0.0).sqrt();
    let call = if sd <= 0.0 {
        (forward - strike).max(0.0)
    } else {
        let d1 = (forward / strike).ln() / sd + 0.5 * sd;
        let d2 = d1 - sd;
        forward * norm_cdf(d1) - strike * norm_cdf(d2)
    };
    match side {
        OptionSide::Call => discount * call,
        OptionSide::Put => discount * (call - (forward - strike)),
    }
}

fn black_call_vega(forward: f64, strike: f64, t: f64, sigma: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    forward * (-0.5 * d1 * d1).exp() / (2.0 * std::f64::consts::PI).sqrt() * t.sqrt()
}

/// Black implied volatility of an option price.
///
/// Puts are mapped to calls by parity. The root is bracketed on
/// `[1e-6, 5]` (widened if needed) and refined by a safeguarded
/// Newton/bisection iteration to `1e-10` absolute in price.
pub fn implied_vol(price: f64, forward: f64, strike: f64, t: f64, discount: f64, side: OptionSide) -> Result<f64> {
    if !(forward > 0.0 && strike > 0.0 && t > 0.0 && discount > 0.0) {
        return Err(Error::Input(format!(
            "implied vol needs positive forward, strike, expiry and discount (F={forward}, K={strike}, T={t}, B={discount})"
        )));
    }
    // undiscounted call price
    let call = match side {
        OptionSide::Call => price / discount,
        OptionSide::Put => price / discount + (forward - strike),
    };
    let lower = (forward - strike).max(0.0);
    let upper = forward;
    if !(call >= lower - INTRINSIC_CLAMP / discount) || !(call < upper) {
        let shift = match side {
            OptionSide::Call => 0.0,
            OptionSide::Put => forward - strike,
        };
        return Err(Error::PriceOutOfBounds {
            price,
            lower: discount * (lower - shift),
            upper: discount * (upper - shift),
        });
    }
    if call <= lower {
        return Ok(0.0);
    }

    let tol = 1e-10 / discount;
    let f = |s: f64| black_price(forward, strike, t, s, 1.0, OptionSide::Call) - call;

    let mut lo = 1e-6;
    let mut hi = 5.0;
    if f(lo) > 0.0 {
        lo = 0.0;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::NonConvergence { iterations: 0 });
        }
    }

    let mut x = 0.5 * (lo + hi);
    for iter in 0..200 {
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo < 1e-15 {
            return Ok(x);
        }
        let vega = black_call_vega(forward, strike, t, x);
        let newton = x - fx / vega;
        x = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if iter == 199 {
            break;
        }
    }
    Err(Error::NonConvergence { iterations: 200 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atm_reference() {
        let p = black_price(100.0, 100.0, 1.0, 0.2, 1.0, OptionSide::Call);
        assert!((p - 7.965_567_455_405_797).abs() < 1e-12);
        let put = black_price(100.0, 100.0, 1.0, 0.2, 1.0, OptionSide::Put);
        assert!((put - p).abs() < 1e-12);
    }

    #[test]
    fn zero_vol_is_discounted_intrinsic() {
        assert_eq!(black_price(110.0, 100.0, 1.0, 0.0, 0.9, OptionSide::Call), 9.0);
        assert_eq!(black_price(90.0, 100.0, 1.0, 0.0, 0.9, OptionSide::Call), 0.0);
        assert_eq!(black_price(90.0, 100.0, 1.0, 0.0, 0.9, OptionSide::Put), 9.0);
    }

    #[test]
    fn atm_small_vol_expansion() {
        let (f, s, t) = (100.0, 0.01, 0.25);
        let p = black_price(f, f, t, s, 1.0, OptionSide::Call);
        let approx = 0.398_942_280_401_432_7 * f * s * t.sqrt();
        assert!((p / approx - 1.0).abs() < 1e-5);
    }

    #[test]
    fn round_trip() {
        for &(k, t, s) in &[
            (100.0, 1.0, 0.2),
            (80.0, 0.1, 0.5),
            (130.0, 2.0, 0.15),
            (100.0, 0.02, 0.08),
        ] {
            for side in [OptionSide::Call, OptionSide::Put] {
                let p = black_price(100.0, k, t, s, 0.97, side);
                let iv = implied_vol(p, 100.0, k, t, 0.97, side).unwrap();
                assert!((iv - s).abs() < 1e-8, "K={k} T={t} {side:?}: {iv}");
            }
        }
    }

    #[test]
    fn intrinsic_gives_zero_and_bounds_error() {
        assert_eq!(
            implied_vol(10.0, 110.0, 100.0, 1.0, 1.0, OptionSide::Call).unwrap(),
            0.0
        );
        assert_eq!(
            implied_vol(10.0 - 5e-10, 110.0, 100.0, 1.0, 1.0, OptionSide::Call).unwrap(),
            0.0
        );
        assert!(matches!(
            implied_vol(9.0, 110.0, 100.0, 1.0, 1.0, OptionSide::Call),
            Err(Error::PriceOutOfBounds { .. })
        ));
        assert!(matches!(
            implied_vol(111.0, 110.0, 100.0, 1.0, 1.0, OptionSide::Call),
            Err(Error::PriceOutOfBounds { .. })
        ));
    }

    #[test]
    fn monotone_in_price() {
        let mut last = 0.0;
        for i in 1..40 {
            let p = 0.5 * i as f64;
            let iv = implied_vol(p, 100.0, 105.0, 0.5, 1.0, OptionSide::Call).unwrap();
            assert!(iv > last);
            last = iv;
        }
    }
}
