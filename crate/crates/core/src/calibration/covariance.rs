//! Parameter covariance of a non-linear least-squares fit by the sandwich
//! formula `(F'WF)⁻¹ F'WΣWF (F'WF)⁻¹`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative finite-difference step for Jacobians.
pub const FD_RELATIVE_STEP: f64 = 1e-5;
/// Absolute floor of the finite-difference step.
pub const FD_MIN_STEP: f64 = 1e-8;
/// Reciprocal condition number below which `F'WF` is treated as singular.
const RCOND_MIN: f64 = 1e-14;

/// Price variance implied by a quote's bid-ask spread, `(ask − bid)²/16`.
pub fn spread_variance(bid: f64, ask: f64) -> f64 {
    let s = ask - bid;
    s * s / 16.0
}

/// General sandwich covariance with weight matrix `w` and observation
/// covariance `sigma`.
pub fn sandwich_covariance(jac: &DMatrix<f64>, w: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = jac.shape();
    if w.shape() != (n, n) || sigma.shape() != (n, n) {
        return Err(Error::Input(format!(
            "sandwich dimensions: jacobian {n}x{p}, weights {:?}, covariance {:?}",
            w.shape(),
            sigma.shape()
        )));
    }
    if n < p {
        return Err(Error::InsufficientData { needed: p, got: n });
    }
    let ftw = jac.transpose() * w;
    let bread = symmetric_inverse(&(&ftw * jac))?;
    let meat = &ftw * sigma * ftw.transpose();
    Ok(symmetrize(&bread * meat * &bread))
}

/// Sandwich covariance with identity weights and independent price errors of
/// the given variances.
pub fn param_covariance(jac: &DMatrix<f64>, price_variances: &[f64]) -> Result<DMatrix<f64>> {
    let (n, _) = jac.shape();
    if price_variances.len() != n {
        return Err(Error::Input(format!(
            "{} price variances for {n} residuals",
            price_variances.len()
        )));
    }
    let sigma = DMatrix::from_diagonal(&DVector::from_column_slice(price_variances));
    sandwich_covariance(jac, &DMatrix::identity(n, n), &sigma)
}

pub(crate) fn symmetric_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= RCOND_MIN * max {
        return Err(Error::RankDeficient);
    }
    let inv = a.clone().try_inverse().ok_or(Error::RankDeficient)?;
    Ok(symmetrize(inv))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Central-difference Jacobian of a vector function, one column per parameter.
pub fn jacobian<F>(mut f: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut columns = Vec::with_capacity(x.len());
    let mut rows = None;
    for j in 0..x.len() {
        let h = (FD_RELATIVE_STEP * x[j].abs()).max(FD_MIN_STEP);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fu = f(&up)?;
        let fd = f(&dn)?;
        if fu.len() != fd.len() || rows.is_some_and(|r| r != fu.len()) {
            return Err(Error::Input("residual vector changed length".into()));
        }
        rows = Some(fu.len());
        columns.push(
            fu.iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let n = rows.unwrap_or(0);
    Ok(DMatrix::from_fn(n, x.len(), |i, j| columns[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DMatrix<f64> {
        DMatrix::from_row_slice(5, 2, &[1.0, 0.1, 1.0, 0.7, 1.0, 1.3, 1.0, 2.2, 1.0, 3.0])
    }

    #[test]
    fn linear_model_matches_closed_form() {
        let z = design();
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 0.5, 1.0, 3.0]));
        let sigma = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.1, 0.4, 0.2, 0.3, 0.05]));
        let got = sandwich_covariance(&z, &w, &sigma).unwrap();
        let bread = (z.transpose() * &w * &z).try_inverse().unwrap();
        let want = &bread * z.transpose() * &w * &sigma * &w * &z * &bread;
        assert!((got - want).abs().max() < 1e-14);
    }

    #[test]
    fn homoscedastic_reduction() {
        let z = design();
        let got = param_covariance(&z, &[0.25; 5]).unwrap();
        let want = (z.transpose() * &z).try_inverse().unwrap() * 0.25;
        assert!((got - want).abs().max() < 1e-14);
    }

    #[test]
    fn doubling_spreads_quadruples() {
        let z = design();
        let spreads = [0.2, 0.4, 0.1, 0.3, 0.5];
        let v1: Vec<f64> = spreads.iter().map(|s| spread_variance(1.0, 1.0 + s)).collect();
        let v2: Vec<f64> = spreads.iter().map(|s| spread_variance(1.0, 1.0 + 2.0 * s)).collect();
        let c1 = param_covariance(&z, &v1).unwrap();
        let c2 = param_covariance(&z, &v2).unwrap();
        assert!((c2 - c1 * 4.0).abs().max() < 1e-14);
    }

    #[test]
    fn collinear_design_is_rank_deficient() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(param_covariance(&z, &[1.0; 3]), Err(Error::RankDeficient));
    }

    #[test]
    fn finite_difference_jacobian() {
        let f = |p: &[f64]| Ok(vec![p[0] * p[1], p[0].exp(), p[1] * p[1]]);
        let j = jacobian(f, &[0.5, 2.0]).unwrap();
        let want = DMatrix::from_row_slice(3, 2, &[2.0, 0.5, 0.5f64.exp(), 0.0, 0.0, 4.0]);
        assert!((j - want).abs().max() < 1e-9);
    }
}
