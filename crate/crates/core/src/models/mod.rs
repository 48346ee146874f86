//! Characteristic functions, martingale drift, moments, Lévy density and
//! existence-condition checks for Lévy, additive and Sato normal tempered
//! stable processes.
//!
//! The forward exponent at maturity `t` has characteristic function
//!
//! ```text
//! E[e^{iu f_t}] = L_t(iu(1/2 + η_t)σ_t² + u²σ_t²/2; k_t, α) · e^{iu φ_t t}
//! ```
//!
//! where `L_t` is the Laplace transform of a tempered stable subordinator.
//! A [`TemperedStableSlice`] holds one maturity's parameters; Lévy (constant
//! parameters), power-law and Sato processes are families of slices.

mod existence;
mod laplace;
mod levy;
mod moments;
mod slice;

pub use existence::{
    check_existence, g1, g2, g3_log, pair_shortfall, pair_violations, ConditionId, ConditionReport, Violation,
    MONOTONICITY_TOL,
};
pub use laplace::log_laplace;
pub use levy::levy_density;
pub use moments::{cumulant, excess_kurtosis, skewness, skewness_closed_form};
pub use slice::{
    ats_cf, check_power_law, lts_cf, martingale_drift, power_law_slice, sato_cf, CharacteristicFunction, LogCfFn,
    LtsParams, PowerLawParams, SatoParams, TemperedStableSlice,
};
