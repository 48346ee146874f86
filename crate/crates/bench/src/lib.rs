//! Shared fixtures for the benchmarks.

use ats_core::market::{prepare_chain, MarketSlice};
use ats_core::models::{PowerLawParams, TemperedStableSlice};
use ats_core::synthetic::{synthetic_chain, SurfaceModel, SurfaceSpec};

pub fn power_law() -> SurfaceModel {
    SurfaceModel::PowerLaw(PowerLawParams::new(0.5, 0.2, 1.0, 1.0, 1.0, -0.5).expect("valid parameters"))
}

pub fn slice(t: f64) -> TemperedStableSlice {
    power_law().slice(t).expect("valid slice")
}

/// Filtered market slices of the synthetic power-law surface at `expiries`.
pub fn market(expiries: &[f64]) -> Vec<MarketSlice> {
    let spec = SurfaceSpec {
        expiries: expiries.to_vec(),
        ..SurfaceSpec::default()
    };
    let quotes = synthetic_chain(&power_law(), &spec).expect("synthetic chain");
    prepare_chain(&quotes, &spec.curve().expect("curve"), spec.spot).expect("market slices")
}
