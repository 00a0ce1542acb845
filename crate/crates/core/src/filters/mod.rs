//! The filter bank: EKF, UKF and a bootstrap particle filter, all updating
//! against the same [`StateSpaceModel`].

mod ekf;
mod pf;
mod resample;
mod ukf;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub use ekf::ekf_update;
pub use pf::{pf_update, ParticleCloud, PfUpdate};
pub(crate) use pf::{normalize_log_weights, propagate_and_weight};
pub use resample::systematic_resample;
pub use ukf::{ukf_update, SigmaPointParams};

use crate::error::Error;
use crate::linalg::{floor_psd, EIGEN_FLOOR};

/// Members of the filter set. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FilterId {
    Ekf,
    Ukf,
    Pf,
}

impl FilterId {
    pub const ALL: [FilterId; 3] = [FilterId::Ekf, FilterId::Ukf, FilterId::Pf];

    pub fn name(self) -> &'static str {
        match self {
            FilterId::Ekf => "EKF",
            FilterId::Ukf => "UKF",
            FilterId::Pf => "PF",
        }
    }

    pub(crate) fn lane(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for FilterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EKF" => Ok(FilterId::Ekf),
            "UKF" => Ok(FilterId::Ukf),
            "PF" => Ok(FilterId::Pf),
            other => Err(Error::InvalidInput(format!("unknown filter `{other}`"))),
        }
    }
}

/// Gaussian summary of a filtering distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl GaussianBelief {
    /// Builds a belief with the covariance symmetrized and eigenvalue-floored.
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Self {
        Self { mean, cov: floor_psd(&cov, EIGEN_FLOOR) }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|x| x.is_finite())
    }

    /// The same mean with the covariance multiplied by `factor`.
    pub fn inflated(&self, factor: f64) -> Self {
        Self::new(self.mean, self.cov * factor)
    }
}

/// Covariance inflation applied when a filter falls back to its prior.
pub const FALLBACK_INFLATION: f64 = 10.0;
