//! Additive normal tempered stable models: characteristic functions, Fourier
//! pricing, synthetic forwards, calibration and term-structure scaling tests.

pub mod calibration;
pub mod error;
pub mod market;
pub mod models;
pub mod pricing;
pub mod quad;
pub mod scaling;
pub mod special;
pub mod synthetic;

pub use calibration::{CalibrationResult, Family, OptimizerConfig};
pub use error::{Error, Result};
pub use market::{DiscountCurve, MarketSlice, OptionQuote};
pub use models::{CharacteristicFunction, LtsParams, PowerLawParams, SatoParams, TemperedStableSlice};
pub use pricing::{OptionSide, QuadratureConfig, QuadratureScheme};
pub use scaling::{ScalingAnalysis, ScalingFit};
