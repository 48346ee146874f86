use num_complex::Complex64;

use crate::error::{Error, Result};

/// Log-Laplace transform `ln L_t(u; k, α)` of the tempered stable subordinator
/// with unit mean rate and variance `k` per unit time.
///
/// For `α ∈ (0, 1)` this is `(t/k)·((1−α)/α)·(1 − (1 + u·k/(1−α))^α)`, for
/// `α = 0` (gamma subordinator) `−(t/k)·ln(1 + u·k)`. Principal branches are
/// used; the base of the power/log must stay off the closed negative real axis.
/// `k = 0` returns the deterministic-clock limit `−u·t`.
pub fn log_laplace(u: Complex64, t: f64, k: f64, alpha: f64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "stability index must lie in [0, 1)",
        });
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "subordinator variance must be finite and non-negative",
        });
    }
    if !u.re.is_finite() || !u.im.is_finite() {
        return Err(Error::Domain(format!("non-finite Laplace argument {u}")));
    }
    if k == 0.0 {
        return Ok(-u * t);
    }

    let z = u * (k / (1.0 - alpha));
    let base = Complex64::new(1.0, 0.0) + z;
    if base.im == 0.0 && base.re <= 0.0 {
        return Err(Error::Domain(format!(
            "Laplace transform base {} on the branch cut (u = {u}, k = {k}, alpha = {alpha})",
            base.re
        )));
    }

    let log_base = ln1p(z);
    if alpha == 0.0 {
        Ok(-log_base * (t / k))
    } else {
        // 1 − base^α = −expm1(α·ln base)
        let scale = (t / k) * ((1.0 - alpha) / alpha);
        Ok(-expm1(log_base * alpha) * scale)
    }
}

/// `ln(1 + z)` without cancellation for small `|z|`.
fn ln1p(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        z * (1.0 - z * (0.5 - z * (1.0 / 3.0 - z * 0.25)))
    } else {
        (1.0 + z).ln()
    }
}

/// `e^z − 1` without cancellation for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    } else {
        z.exp() - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_argument_is_zero() {
        for &alpha in &[0.0, 0.3, 0.5, 0.9] {
            let v = log_laplace(c(0.0), 2.0, 0.7, alpha).unwrap();
            assert_eq!(v, c(0.0));
        }
    }

    #[test]
    fn gamma_subordinator_value() {
        let v = log_laplace(c(1.0), 1.0, 1.0, 0.0).unwrap();
        assert!((v.re + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn inverse_gaussian_value() {
        // 1 − √3
        let v = log_laplace(c(1.0), 1.0, 1.0, 0.5).unwrap();
        assert!((v.re - (-0.732_050_807_568_877_3)).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_limit_is_deterministic_clock() {
        let u = Complex64::new(0.3, -0.2);
        assert_eq!(log_laplace(u, 1.5, 0.0, 0.5).unwrap(), -u * 1.5);
        // and the k -> 0 limit is continuous
        let near = log_laplace(u, 1.5, 1e-9, 0.5).unwrap();
        assert!((near + u * 1.5).norm() < 1e-8);
        let near0 = log_laplace(u, 1.5, 1e-9, 0.0).unwrap();
        assert!((near0 + u * 1.5).norm() < 1e-8);
    }

    #[test]
    fn small_alpha_approaches_gamma_case() {
        let u = Complex64::new(0.8, 0.4);
        let a = log_laplace(u, 1.0, 0.5, 1e-7).unwrap();
        let b = log_laplace(u, 1.0, 0.5, 0.0).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn branch_cut_is_rejected() {
        assert!(matches!(log_laplace(c(-2.0), 1.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(log_laplace(c(-1.0), 1.0, 1.0, 0.5), Err(Error::Domain(_))));
        // off-axis points with negative real base are still on the principal sheet
        assert!(log_laplace(Complex64::new(-2.0, 0.1), 1.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn bad_alpha_is_rejected() {
        assert!(log_laplace(c(1.0), 1.0, 1.0, 1.0).is_err());
        assert!(log_laplace(c(1.0), 1.0, 1.0, -0.1).is_err());
    }
}
