//! Sufficient conditions for a sequence of maturity slices to be the marginals
//! of an additive process.
//!
//! Three functions of time must be non-decreasing:
//!
//! ```text
//! g1(t) =  (1/2 + η_t) − ω_t
//! g2(t) = −(1/2 + η_t) − ω_t
//! g3(t) = t^{1/α} σ_t² ω_t / k_t^{(1−α)/α}
//! ω_t   = sqrt((1/2 + η_t)² + 2(1−α)/(σ_t² k_t))
//! ```
//!
//! and both `t σ_t² η_t` and `t σ_t^{2α} η_t^α / k_t^{1−α}` must vanish as
//! `t → 0`. `g3` is monitored through `α ln g3 = ln t + α ln σ² − (1−α) ln k +
//! α ln ω`, which has the same monotonicity for `α > 0` and stays finite as
//! `α → 0`, where it becomes `ln(t / k_t)`.
//!
//! On a finite grid the vanishing-limit condition can only be approximated:
//! each quantity must be strictly increasing between the two smallest grid
//! times (or already zero there). These findings carry
//! [`ConditionId::LimitProxy`].

use serde::{Deserialize, Serialize};

use super::slice::TemperedStableSlice;

/// Relative slack allowed when a monitored function decreases between grid points.
pub const MONOTONICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    G1,
    G2,
    G3,
    /// Grid proxy for the `t → 0` limit conditions.
    LimitProxy,
    /// Slices not strictly increasing in time or with mixed stability index.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: ConditionId,
    /// Later of the two grid times involved.
    pub time: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            valid: violations.is_empty(),
            violations,
        }
    }
}

fn omega(s: &TemperedStableSlice) -> f64 {
    let h = 0.5 + s.eta();
    (h * h + 2.0 * (1.0 - s.alpha()) / (s.sigma() * s.sigma() * s.k())).sqrt()
}

/// `g1(t)`; `−∞` when `k_t = 0`.
pub fn g1(s: &TemperedStableSlice) -> f64 {
    if s.k() == 0.0 {
        return f64::NEG_INFINITY;
    }
    let h = 0.5 + s.eta();
    let w = omega(s);
    if h > 0.0 {
        // h − ω = (h² − ω²) / (h + ω), avoids cancellation for large h
        let c = 2.0 * (1.0 - s.alpha()) / (s.sigma() * s.sigma() * s.k());
        -c / (h + w)
    } else {
        h - w
    }
}

/// `g2(t)`; `−∞` when `k_t = 0`.
pub fn g2(s: &TemperedStableSlice) -> f64 {
    if s.k() == 0.0 {
        return f64::NEG_INFINITY;
    }
    let h = 0.5 + s.eta();
    let w = omega(s);
    if h < 0.0 {
        let c = 2.0 * (1.0 - s.alpha()) / (s.sigma() * s.sigma() * s.k());
        -c / (w - h)
    } else {
        -h - w
    }
}

/// `α · ln g3(t)`, see the module docs; `+∞` when `k_t = 0`.
pub fn g3_log(s: &TemperedStableSlice) -> f64 {
    if s.k() == 0.0 {
        return f64::INFINITY;
    }
    let a = s.alpha();
    s.t().ln() + a * (s.sigma() * s.sigma()).ln() - (1.0 - a) * s.k().ln() + a * omega(s).ln()
}

/// `t σ² |η|`
fn limit_q1(s: &TemperedStableSlice) -> f64 {
    s.t() * s.sigma() * s.sigma() * s.eta().abs()
}

/// `t σ^{2α} |η|^α / k^{1−α}`; `None` when `k_t = 0` (no jump part).
fn limit_q2(s: &TemperedStableSlice) -> Option<f64> {
    if s.k() == 0.0 {
        return None;
    }
    let a = s.alpha();
    let eta_pow = if a == 0.0 { 1.0 } else { s.eta().abs().powf(a) };
    Some(s.t() * s.sigma().powf(2.0 * a) * eta_pow / s.k().powf(1.0 - a))
}

fn decreased(prev: f64, next: f64) -> bool {
    if prev.is_infinite() || next.is_infinite() {
        return next < prev;
    }
    next < prev - MONOTONICITY_TOL * (1.0 + prev.abs())
}

/// Check the existence conditions on a time-ordered list of slices.
pub fn check_existence(slices: &[TemperedStableSlice]) -> ConditionReport {
    let mut violations = Vec::new();

    for pair in slices.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !(b.t() > a.t()) {
            violations.push(Violation {
                condition: ConditionId::Grid,
                time: b.t(),
                detail: format!("times not strictly increasing: {} then {}", a.t(), b.t()),
            });
            continue;
        }
        if a.alpha() != b.alpha() {
            violations.push(Violation {
                condition: ConditionId::Grid,
                time: b.t(),
                detail: format!("stability index changes: {} then {}", a.alpha(), b.alpha()),
            });
            continue;
        }
        violations.extend(pair_violations(a, b));
    }

    if let [first, second, ..] = slices {
        if second.t() > first.t() {
            violations.extend(limit_proxy(first, second));
        }
    }

    ConditionReport::from_violations(violations)
}

/// Monotonicity violations between an earlier slice `a` and a later slice `b`.
pub fn pair_violations(a: &TemperedStableSlice, b: &TemperedStableSlice) -> Vec<Violation> {
    let mut out = Vec::new();
    if a.k() == 0.0 {
        // no jumps before: the Lévy measure can only grow
        return out;
    }
    let checks = [
        (ConditionId::G1, g1(a), g1(b)),
        (ConditionId::G2, g2(a), g2(b)),
        (ConditionId::G3, g3_log(a), g3_log(b)),
    ];
    for (id, prev, next) in checks {
        if decreased(prev, next) {
            out.push(Violation {
                condition: id,
                time: b.t(),
                detail: format!("decreases from {prev:e} to {next:e}"),
            });
        }
    }
    out
}

/// Amount by which each monitored function decreases from `a` to `b`,
/// zero when non-decreasing. Used as a calibration penalty.
pub fn pair_shortfall(a: &TemperedStableSlice, b: &TemperedStableSlice) -> [f64; 3] {
    if a.k() == 0.0 {
        return [0.0; 3];
    }
    let short = |prev: f64, next: f64| {
        if prev.is_infinite() || next.is_infinite() {
            if next < prev {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (prev - next).max(0.0)
        }
    };
    [short(g1(a), g1(b)), short(g2(a), g2(b)), short(g3_log(a), g3_log(b))]
}

fn limit_proxy(first: &TemperedStableSlice, second: &TemperedStableSlice) -> Vec<Violation> {
    let mut out = Vec::new();
    let vanishing = |q0: f64, q1: f64| q0 == 0.0 || q0 < q1 * (1.0 - MONOTONICITY_TOL);

    let (a, b) = (limit_q1(first), limit_q1(second));
    if !vanishing(a, b) {
        out.push(Violation {
            condition: ConditionId::LimitProxy,
            time: second.t(),
            detail: format!(
                "t·σ²·η not decreasing toward t → 0 ({a:e} at t={}, {b:e} at t={})",
                first.t(),
                second.t()
            ),
        });
    }
    if let (Some(a), Some(b)) = (limit_q2(first), limit_q2(second)) {
        if !vanishing(a, b) {
            out.push(Violation {
                condition: ConditionId::LimitProxy,
                time: second.t(),
                detail: format!(
                    "t·σ^(2α)·η^α/k^(1−α) not decreasing toward t → 0 ({a:e} at t={}, {b:e} at t={})",
                    first.t(),
                    second.t()
                ),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{power_law_slice, LtsParams, PowerLawParams};

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn constant_parameters_are_valid() {
        for &alpha in &[0.0, 0.5, 0.8] {
            let p = LtsParams::new(alpha, 0.2, 0.7, 0.9).unwrap();
            let slices: Vec<_> = log_grid(0.01, 5.0, 30).iter().map(|&t| p.slice(t).unwrap()).collect();
            let report = check_existence(&slices);
            assert!(report.valid, "{:?}", report.violations);
        }
    }

    #[test]
    fn admissible_power_law_is_valid() {
        let p = PowerLawParams::new(0.5, 0.2, 1.0, 1.0, 1.0, -0.5).unwrap();
        let slices: Vec<_> = log_grid(1e-4, 10.0, 200)
            .iter()
            .map(|&t| power_law_slice(t, &p).unwrap())
            .collect();
        assert!(check_existence(&slices).valid);
    }

    #[test]
    fn steep_k_scaling_breaks_g3() {
        // β = 2 > 1/(1 − α/2) = 4/3
        let p = PowerLawParams::new(0.5, 0.2, 1.0, 1.0, 2.0, -0.5).unwrap();
        let grid = log_grid(1e-4, 10.0, 200);
        let slices: Vec<_> = grid.iter().map(|&t| power_law_slice(t, &p).unwrap()).collect();
        let report = check_existence(&slices);
        assert!(!report.valid);
        assert!(report.violations.iter().any(|v| v.condition == ConditionId::G3));

        // brute-force sign check of the raw g3 finite differences
        let raw_g3 = |t: f64| {
            let s = power_law_slice(t, &p).unwrap();
            t.powf(2.0) * 0.04 / s.k() * omega(&s)
        };
        assert!(grid.windows(2).any(|w| raw_g3(w[1]) < raw_g3(w[0])));
    }

    #[test]
    fn limit_proxy_catches_non_vanishing_drift_term() {
        // δ = −1: t σ² η_t is constant, so it does not vanish at 0
        let p = PowerLawParams::new(0.0, 0.2, 1.0, 1.0, 1.0, -1.0).unwrap();
        let slices: Vec<_> = log_grid(1e-3, 1.0, 20)
            .iter()
            .map(|&t| power_law_slice(t, &p).unwrap())
            .collect();
        let report = check_existence(&slices);
        assert!(report.violations.iter().any(|v| v.condition == ConditionId::LimitProxy));
    }

    #[test]
    fn unordered_grid_reported() {
        let p = LtsParams::new(0.5, 0.2, 0.7, 0.9).unwrap();
        let slices = vec![p.slice(1.0).unwrap(), p.slice(0.5).unwrap()];
        let report = check_existence(&slices);
        assert!(!report.valid);
        assert_eq!(report.violations[0].condition, ConditionId::Grid);
    }

    #[test]
    fn stable_forms_agree_with_naive() {
        let s = crate::models::TemperedStableSlice::new(0.3, 0.5, 0.2, 0.4, 1.7).unwrap();
        let h = 0.5 + s.eta();
        let w = omega(&s);
        assert!((g1(&s) - (h - w)).abs() < 1e-12);
        assert!((g2(&s) - (-h - w)).abs() < 1e-12);
        let naive_g3 = s.t().powf(2.0) * 0.04 / s.k() * w;
        assert!((g3_log(&s) - 0.5 * naive_g3.ln()).abs() < 1e-12);
    }

    #[test]
    fn valid_iff_no_violations() {
        // η growing linearly in t drives g2 down
        let p = PowerLawParams::new(0.5, 0.2, 1.0, 1.0, 0.5, 1.0).unwrap();
        let slices: Vec<_> = log_grid(0.5, 10.0, 10)
            .iter()
            .map(|&t| power_law_slice(t, &p).unwrap())
            .collect();
        let r = check_existence(&slices);
        assert_eq!(r.valid, r.violations.is_empty());
        assert!(!r.valid);
    }
}
