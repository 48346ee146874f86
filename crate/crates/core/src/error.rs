use thiserror::Error;

/// Errors produced by the pricing, calibration and scaling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A complex power or logarithm would be evaluated on its branch cut,
    /// or a Laplace transform outside its domain of convergence.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Fourier integrand did not decay below tolerance within the
    /// maximum truncation.
    #[error("quadrature did not converge: integrand {magnitude:e} at truncation {truncation}")]
    QuadratureDivergence { truncation: f64, magnitude: f64 },

    /// Option price outside the no-arbitrage bounds, so no implied volatility exists.
    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("discount curve cannot extrapolate to {tenor} (last pillar {last})")]
    Extrapolation { tenor: f64, last: f64 },

    /// No strike with both a call and a put survived filtering.
    #[error("no valid strike for expiry {expiry}")]
    NoValidStrike { expiry: f64 },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Normal-equation matrix is singular or numerically rank deficient.
    #[error("rank deficient design matrix")]
    RankDeficient,

    #[error("iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("malformed input: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
