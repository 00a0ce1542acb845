use nalgebra::Matrix2;

use super::GaussianBelief;
use crate::error::{Error, Result};
use crate::ssm::{ExogenousInputs, StateSpaceModel};

/// One predict/correct cycle of the extended Kalman filter, with the
/// Joseph-form covariance update.
pub fn ekf_update<M: StateSpaceModel + ?Sized>(
    prior: &GaussianBelief,
    obs: f64,
    ex: &ExogenousInputs,
    model: &M,
) -> Result<GaussianBelief> {
    if !prior.is_finite() || !obs.is_finite() {
        return Err(Error::InvalidInput("EKF received non-finite prior or observation".into()));
    }
    let f = model.transition_jacobian(&prior.mean, ex);
    let x_pred = model.project(model.transition_mean(&prior.mean, ex));
    let p_pred = f * prior.cov * f.transpose() + model.process_noise();

    let h = model.measurement_gradient(&x_pred, ex)?;
    let innovation = obs - model.measure(&x_pred, ex)?;
    let s = (h * p_pred * h.transpose())[0] + model.measurement_noise();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::NumericalFailure(format!("EKF innovation variance {s}")));
    }
    let gain = p_pred * h.transpose() / s;
    let mean = model.project(x_pred + gain * innovation);
    let i_kh = Matrix2::identity() - gain * h;
    let cov = i_kh * p_pred * i_kh.transpose() + gain * gain.transpose() * model.measurement_noise();
    let post = GaussianBelief::new(mean, cov);
    if !post.is_finite() {
        return Err(Error::NumericalFailure("EKF produced non-finite posterior".into()));
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::LinearGaussianModel;
    use nalgebra::{RowVector2, Vector2};

    fn ex() -> ExogenousInputs {
        ExogenousInputs::new(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn huge_measurement_noise_keeps_prediction() {
        let model = LinearGaussianModel::new(
            Matrix2::new(0.9, 0.0, 0.1, 1.0),
            RowVector2::new(1.0, 1.0),
            Matrix2::identity() * 0.1,
            1e30,
        );
        let prior = GaussianBelief::new(Vector2::new(1.0, 2.0), Matrix2::identity());
        let post = ekf_update(&prior, 100.0, &ex(), &model).unwrap();
        let pred_mean = model.a * prior.mean;
        let pred_cov = model.a * prior.cov * model.a.transpose() + model.q;
        assert!((post.mean - pred_mean).amax() < 1e-20);
        assert!((post.cov - pred_cov).amax() < 1e-12);
    }

    #[test]
    fn repeated_observations_shrink_variance() {
        let model = LinearGaussianModel::new(
            Matrix2::identity(),
            RowVector2::new(1.0, 0.5),
            Matrix2::zeros(),
            0.5,
        );
        let mut belief = GaussianBelief::new(Vector2::new(0.0, 0.0), Matrix2::identity());
        for _ in 0..20 {
            let next = ekf_update(&belief, 1.0, &ex(), &model).unwrap();
            assert!(next.cov.trace() <= belief.cov.trace() + 1e-15);
            belief = next;
        }
    }

    #[test]
    fn non_positive_innovation_fails() {
        let model = LinearGaussianModel::new(Matrix2::identity(), RowVector2::new(1.0, 0.0), Matrix2::zeros(), -5.0);
        let prior = GaussianBelief::new(Vector2::zeros(), Matrix2::identity());
        assert!(matches!(
            ekf_update(&prior, 0.0, &ex(), &model),
            Err(Error::NumericalFailure(_))
        ));
    }
}
