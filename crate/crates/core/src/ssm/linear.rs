use nalgebra::{Matrix2, RowVector2, Vector2};

use super::{ExogenousInputs, StateSpaceModel};
use crate::error::Result;

/// `x' = A x + b + V`, `y = c x + d + W`. Used to check the filters and the
/// bound against closed-form Kalman recursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianModel {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: RowVector2<f64>,
    pub d: f64,
    pub q: Matrix2<f64>,
    pub r: f64,
}

impl LinearGaussianModel {
    pub fn new(a: Matrix2<f64>, c: RowVector2<f64>, q: Matrix2<f64>, r: f64) -> Self {
        Self { a, b: Vector2::zeros(), c, d: 0.0, q, r }
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn transition_mean(&self, x: &Vector2<f64>, _ex: &ExogenousInputs) -> Vector2<f64> {
        self.a * x + self.b
    }

    fn transition_jacobian(&self, _x: &Vector2<f64>, _ex: &ExogenousInputs) -> Matrix2<f64> {
        self.a
    }

    fn process_noise(&self) -> Matrix2<f64> {
        self.q
    }

    fn measure(&self, x: &Vector2<f64>, _ex: &ExogenousInputs) -> Result<f64> {
        Ok((self.c * x)[0] + self.d)
    }

    fn measurement_gradient(&self, _x: &Vector2<f64>, _ex: &ExogenousInputs) -> Result<RowVector2<f64>> {
        Ok(self.c)
    }

    fn measurement_noise(&self) -> f64 {
        self.r
    }
}
