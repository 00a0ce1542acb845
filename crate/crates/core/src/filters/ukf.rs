use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::GaussianBelief;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_regularized, floor_psd, EIGEN_FLOOR};
use crate::ssm::{ExogenousInputs, StateSpaceModel};

const N: usize = 2;
const POINTS: usize = 2 * N + 1;

/// Scaled unscented-transform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SigmaPointParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for SigmaPointParams {
    fn default() -> Self {
        Self { alpha: 1e-3, beta: 2.0, kappa: 0.0 }
    }
}

struct SigmaSet {
    points: [Vector2<f64>; POINTS],
    wm: [f64; POINTS],
    wc: [f64; POINTS],
}

fn sigma_set(mean: &Vector2<f64>, cov: &Matrix2<f64>, sp: &SigmaPointParams) -> Result<SigmaSet> {
    let n = N as f64;
    let lambda = sp.alpha * sp.alpha * (n + sp.kappa) - n;
    let scale = n + lambda;
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("sigma-point scale n + λ = {scale} must be positive")));
    }
    let l = cholesky_regularized(&(cov * scale))?;
    let mut points = [*mean; POINTS];
    for i in 0..N {
        let col = l.column(i);
        points[1 + i] = mean + col;
        points[1 + N + i] = mean - col;
    }
    let w = 0.5 / scale;
    let mut wm = [w; POINTS];
    let mut wc = [w; POINTS];
    wm[0] = lambda / scale;
    wc[0] = wm[0] + (1.0 - sp.alpha * sp.alpha + sp.beta);
    Ok(SigmaSet { points, wm, wc })
}

/// One unscented predict/correct cycle with 2s+1 sigma points, redrawn after prediction.
pub fn ukf_update<M: StateSpaceModel + ?Sized>(
    prior: &GaussianBelief,
    obs: f64,
    ex: &ExogenousInputs,
    model: &M,
    sp: &SigmaPointParams,
) -> Result<GaussianBelief> {
    if !prior.is_finite() || !obs.is_finite() {
        return Err(Error::InvalidInput("UKF received non-finite prior or observation".into()));
    }

    let prior_set = sigma_set(&prior.mean, &prior.cov, sp)?;
    let propagated = prior_set.points.map(|x| model.transition_mean(&x, ex));
    let mut x_pred = Vector2::zeros();
    for (w, x) in prior_set.wm.iter().zip(&propagated) {
        x_pred += *w * x;
    }
    let mut p_pred = model.process_noise();
    for (w, x) in prior_set.wc.iter().zip(&propagated) {
        let d = x - x_pred;
        p_pred += *w * d * d.transpose();
    }
    let x_pred = model.project(x_pred);
    let p_pred = floor_psd(&p_pred, EIGEN_FLOOR);

    let set = sigma_set(&x_pred, &p_pred, sp)?;
    let mut z = [0.0; POINTS];
    for (zi, x) in z.iter_mut().zip(&set.points) {
        *zi = model.measure(x, ex)?;
    }
    let z_hat: f64 = set.wm.iter().zip(&z).map(|(w, zi)| w * zi).sum();
    let mut s = model.measurement_noise();
    let mut cross = Vector2::zeros();
    for i in 0..POINTS {
        let dz = z[i] - z_hat;
        s += set.wc[i] * dz * dz;
        cross += set.wc[i] * (set.points[i] - x_pred) * dz;
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NumericalFailure(format!("UKF innovation variance {s}")));
    }
    let gain = cross / s;
    let mean = model.project(x_pred + gain * (obs - z_hat));
    let cov = p_pred - gain * gain.transpose() * s;
    let post = GaussianBelief::new(mean, cov);
    if !post.is_finite() {
        return Err(Error::NumericalFailure("UKF produced non-finite posterior".into()));
    }
    Ok(post)
}
