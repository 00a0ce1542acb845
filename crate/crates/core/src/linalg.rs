//! Small dense helpers for the 2×2 matrices used throughout the filters.

use nalgebra::{Matrix2, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which a ridge is added before inverting.
pub const MAX_CONDITION: f64 = 1e12;

/// Smallest eigenvalue kept when flooring a covariance.
pub const EIGEN_FLOOR: f64 = 1e-24;

pub fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetrize, then clamp eigenvalues to at least `floor`.
pub fn floor_psd(m: &Matrix2<f64>, floor: f64) -> Matrix2<f64> {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| if l.is_finite() { l.max(floor) } else { floor });
    let rebuilt = eig.eigenvectors * Matrix2::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    symmetrize(&rebuilt)
}

pub fn condition_number(m: &Matrix2<f64>) -> f64 {
    let sv = m.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse with a ridge of `1e-12 · trace/2` when the condition number exceeds [`MAX_CONDITION`].
pub fn regularized_inverse(m: &Matrix2<f64>, what: &str) -> Result<Matrix2<f64>> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Singular(format!("{what} has non-finite entries")));
    }
    let mut work = *m;
    if condition_number(&work) > MAX_CONDITION {
        let ridge = 1e-12 * work.trace().abs() / 2.0;
        work += Matrix2::identity() * ridge;
    }
    match work.try_inverse() {
        Some(inv) if inv.iter().all(|x| x.is_finite()) => Ok(inv),
        _ => Err(Error::Singular(format!("{what} is not invertible"))),
    }
}

/// Symmetric square root factor `L` with `L Lᵀ = m`; accepts positive semi-definite input.
pub fn psd_factor(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let sym = symmetrize(m);
    if !sym.iter().all(|x| x.is_finite()) {
        return Err(Error::Covariance("non-finite covariance".into()));
    }
    if let Some(chol) = sym.cholesky() {
        return Ok(chol.l());
    }
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
        return Err(Error::Covariance(format!(
            "covariance has negative eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * Matrix2::from_diagonal(&roots))
}

/// Lower Cholesky factor, retrying once after eigenvalue flooring.
pub fn cholesky_regularized(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let sym = symmetrize(m);
    if let Some(chol) = sym.cholesky() {
        return Ok(chol.l());
    }
    let floored = floor_psd(&sym, EIGEN_FLOOR.max(1e-15 * sym.trace().abs()));
    floored
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Covariance("Cholesky failed after regularization".into()))
}

pub fn is_symmetric(m: &Matrix2<f64>, tol: f64) -> bool {
    let scale = m.amax().max(1.0);
    (m[(0, 1)] - m[(1, 0)]).abs() <= tol * scale
}
