use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laplace::log_laplace;
use crate::error::{ensure_finite, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Anything that can evaluate the characteristic function `E[exp(i u f_t)]`
/// of the forward exponent at complex `u`.
pub trait CharacteristicFunction {
    fn log_cf(&self, u: Complex64) -> Result<Complex64>;

    fn cf(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.log_cf(u)?.exp())
    }
}

/// Adapter turning a closure returning the log-CF into a [`CharacteristicFunction`].
pub struct LogCfFn<F>(pub F);

impl<F> CharacteristicFunction for LogCfFn<F>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    fn log_cf(&self, u: Complex64) -> Result<Complex64> {
        (self.0)(u)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "stability index must lie in [0, 1)",
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

/// Marginal law of the forward exponent at one maturity: a normal tempered
/// stable distribution with parameters `(σ_t, k_t, η_t)` at time `t`.
///
/// Construction enforces that the Laplace transform is evaluated inside its
/// domain of convergence both at the martingale point `u = −i` and on the
/// pricing contour `Im(u) = −1/2`; the martingale drift is cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SliceRepr")]
pub struct TemperedStableSlice {
    t: f64,
    alpha: f64,
    sigma: f64,
    k: f64,
    eta: f64,
    #[serde(skip)]
    drift: f64,
}

#[derive(Deserialize)]
struct SliceRepr {
    t: f64,
    alpha: f64,
    sigma: f64,
    k: f64,
    eta: f64,
}

impl TryFrom<SliceRepr> for TemperedStableSlice {
    type Error = Error;

    fn try_from(r: SliceRepr) -> Result<Self> {
        Self::new(r.t, r.alpha, r.sigma, r.k, r.eta)
    }
}

impl TemperedStableSlice {
    pub fn new(t: f64, alpha: f64, sigma: f64, k: f64, eta: f64) -> Result<Self> {
        check_positive("t", t)?;
        check_alpha(alpha)?;
        check_positive("sigma", sigma)?;
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "must be finite and non-negative",
            });
        }
        ensure_finite("eta", eta)?;

        // The subordinator Laplace transform converges for Re(w) > −(1−α)/k.
        // Along u = −i·p, p ∈ [0, 1], the argument is real and concave in p,
        // so the martingale point w = σ²η bounds it from below; on the contour
        // Im(u) = −1/2 the real part is minimal at Re(u) = 0.
        let s2 = sigma * sigma;
        let scale = k / (1.0 - alpha);
        let at_drift = 1.0 + scale * s2 * eta;
        let on_contour = 1.0 + scale * s2 * (0.125 + 0.5 * eta);
        if !(at_drift > 0.0 && on_contour > 0.0) {
            return Err(Error::Domain(format!(
                "eta = {eta} too negative for k = {k}, sigma = {sigma}: \
                 Laplace transform diverges in the pricing strip"
            )));
        }

        let drift = -log_laplace(Complex64::new(s2 * eta, 0.0), t, k, alpha)?.re;
        Ok(Self {
            t,
            alpha,
            sigma,
            k,
            eta,
            drift,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Same law with a different `(σ, k, η)`; keeps `t` and `α`.
    pub fn with_params(&self, sigma: f64, k: f64, eta: f64) -> Result<Self> {
        Self::new(self.t, self.alpha, sigma, k, eta)
    }

    /// `φ_t · t`, the deterministic drift making `exp(f_t)` a martingale.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// Argument of the subordinator Laplace transform at CF point `u`:
    /// `i u (1/2 + η) σ² + u² σ² / 2`.
    pub fn laplace_argument(&self, u: Complex64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        I * u * ((0.5 + self.eta) * s2) + u * u * (0.5 * s2)
    }
}

impl CharacteristicFunction for TemperedStableSlice {
    fn log_cf(&self, u: Complex64) -> Result<Complex64> {
        let w = self.laplace_argument(u);
        Ok(log_laplace(w, self.t, self.k, self.alpha)? + I * u * self.drift)
    }
}

/// Martingale drift `φ_t t = −ln L_t(σ_t² η_t; k_t, α)`.
pub fn martingale_drift(slice: &TemperedStableSlice) -> f64 {
    slice.drift()
}

/// Characteristic function of an additive normal tempered stable process at
/// the slice maturity.
pub fn ats_cf(u: Complex64, slice: &TemperedStableSlice) -> Result<Complex64> {
    slice.cf(u)
}

/// Time-homogeneous (Lévy) normal tempered stable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtsParams {
    pub alpha: f64,
    pub sigma: f64,
    pub k: f64,
    pub eta: f64,
}

impl LtsParams {
    pub fn new(alpha: f64, sigma: f64, k: f64, eta: f64) -> Result<Self> {
        let p = Self { alpha, sigma, k, eta };
        // validates everything except t
        p.slice(1.0)?;
        Ok(p)
    }

    /// Marginal law at time `t`.
    pub fn slice(&self, t: f64) -> Result<TemperedStableSlice> {
        TemperedStableSlice::new(t, self.alpha, self.sigma, self.k, self.eta)
    }
}

/// Characteristic function of the Lévy normal tempered stable process at `t`.
pub fn lts_cf(u: Complex64, t: f64, params: &LtsParams) -> Result<Complex64> {
    params.slice(t)?.cf(u)
}

/// Self-similar additive (Sato) process built from the unit-time normal
/// tempered stable law: `X_t =d t^γ X_1`, with the drift re-imposed per
/// maturity so the exponential forward is a martingale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatoParams {
    pub alpha: f64,
    pub sigma: f64,
    pub k: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl SatoParams {
    pub fn new(alpha: f64, sigma: f64, k: f64, eta: f64, gamma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("sigma", sigma)?;
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "must be finite and non-negative",
            });
        }
        ensure_finite("eta", eta)?;
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "self-similarity exponent must be non-negative",
            });
        }
        Ok(Self {
            alpha,
            sigma,
            k,
            eta,
            gamma,
        })
    }

    /// Log-CF of the driftless unit-time law, `ln L_1(w(v); k, α)`.
    fn unit_log_cf(&self, v: Complex64) -> Result<Complex64> {
        let s2 = self.sigma * self.sigma;
        let w = I * v * ((0.5 + self.eta) * s2) + v * v * (0.5 * s2);
        log_laplace(w, 1.0, self.k, self.alpha)
    }

    /// The marginal at `t` expressed as an equivalent slice:
    /// `σ_t = σ t^γ / √t`, `k_t = k t`, `η_t = (1/2 + η) t^{−γ} − 1/2`.
    pub fn slice(&self, t: f64) -> Result<TemperedStableSlice> {
        check_positive("t", t)?;
        let scale = t.powf(self.gamma);
        TemperedStableSlice::new(
            t,
            self.alpha,
            self.sigma * scale / t.sqrt(),
            self.k * t,
            (0.5 + self.eta) / scale - 0.5,
        )
    }
}

/// Characteristic function of the Sato process at time `t`: the unit law
/// evaluated at `u·t^γ`, times the martingale drift for that maturity.
pub fn sato_cf(u: Complex64, t: f64, params: &SatoParams) -> Result<Complex64> {
    check_positive("t", t)?;
    let scale = t.powf(params.gamma);
    let drift = -params.unit_log_cf(Complex64::new(0.0, -scale))?.re;
    Ok((params.unit_log_cf(u * scale)? + I * u * drift).exp())
}

/// Power-law scaling parameters: `k_t = k̄ t^β`, `η_t = η̄ t^δ`, `σ_t = σ̄`.
///
/// Construction only checks the basic ranges; whether `(β, δ)` satisfy the
/// existence inequalities is answered by [`check_power_law`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub alpha: f64,
    pub sigma_bar: f64,
    pub k_bar: f64,
    pub eta_bar: f64,
    pub beta: f64,
    pub delta: f64,
}

impl PowerLawParams {
    pub fn new(alpha: f64, sigma_bar: f64, k_bar: f64, eta_bar: f64, beta: f64, delta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("sigma_bar", sigma_bar)?;
        check_positive("k_bar", k_bar)?;
        check_positive("eta_bar", eta_bar)?;
        ensure_finite("beta", beta)?;
        ensure_finite("delta", delta)?;
        Ok(Self {
            alpha,
            sigma_bar,
            k_bar,
            eta_bar,
            beta,
            delta,
        })
    }

    pub fn is_admissible(&self) -> bool {
        check_power_law(self)
    }
}

/// Slice of the power-law scaling process at maturity `t`.
pub fn power_law_slice(t: f64, p: &PowerLawParams) -> Result<TemperedStableSlice> {
    check_positive("t", t)?;
    TemperedStableSlice::new(
        t,
        p.alpha,
        p.sigma_bar,
        p.k_bar * t.powf(p.beta),
        p.eta_bar * t.powf(p.delta),
    )
}

/// True iff `0 ≤ β ≤ 1/(1 − α/2)` and
/// `−min(β, (1 − β(1−α))/α) < δ ≤ 0` (`−β < δ ≤ 0` when `α = 0`), plus the
/// constant-parameter corner `β = δ = 0`.
pub fn check_power_law(p: &PowerLawParams) -> bool {
    let (alpha, beta, delta) = (p.alpha, p.beta, p.delta);
    if !(0.0..1.0).contains(&alpha) {
        return false;
    }
    if !(beta >= 0.0 && beta <= 1.0 / (1.0 - 0.5 * alpha)) {
        return false;
    }
    let lower = if alpha == 0.0 {
        beta
    } else {
        beta.min((1.0 - beta * (1.0 - alpha)) / alpha)
    };
    // β = δ = 0 is the Lévy case, admissible although it sits on the strict bound
    (-lower < delta || beta == 0.0 && delta == 0.0) && delta <= 0.0
}
