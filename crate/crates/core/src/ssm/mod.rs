//! State-space models: the generic additive-Gaussian interface the filters
//! run against, and the Black-Scholes + GARCH(1,1) model over state `(v, r)`.

mod black_scholes;
mod garch;
mod linear;

use std::f64::consts::PI;

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

pub use black_scholes::{black_scholes, bs_measurement_jacobian, bs_price, norm_cdf, norm_pdf};
pub use garch::{calibrate_variance_targeting, garch_log_likelihood, GarchParams};
pub use linear::LinearGaussianModel;

use crate::error::{Error, Result};

/// Variance floor applied after every projection step.
pub const V_FLOOR: f64 = 1e-8;

/// Hidden state: per-step return variance `v` and annual risk-free rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub v: f64,
    pub r: f64,
}

impl StateVector {
    pub fn new(v: f64, r: f64) -> Self {
        Self { v, r }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.v, self.r)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.r.is_finite()
    }
}

impl From<Vector2<f64>> for StateVector {
    fn from(x: Vector2<f64>) -> Self {
        Self { v: x[0], r: x[1] }
    }
}

impl From<StateVector> for Vector2<f64> {
    fn from(s: StateVector) -> Self {
        s.to_vector()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionSide {
    Call,
    Put,
}

impl OptionSide {
    pub fn code(self) -> &'static str {
        match self {
            OptionSide::Call => "C",
            OptionSide::Put => "P",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub strike: f64,
    /// Step index at which the contract expires.
    pub expiry_step: usize,
    pub side: OptionSide,
}

impl ContractSpec {
    pub fn new(strike: f64, expiry_step: usize, side: OptionSide) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::InvalidInput(format!("strike must be positive, got {strike}")));
        }
        Ok(Self { strike, expiry_step, side })
    }

    pub fn is_call(&self) -> bool {
        self.side == OptionSide::Call
    }
}

/// Per-step market inputs that are observed rather than estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExogenousInputs {
    /// Underlying price `S_t`.
    pub s: f64,
    /// Log-return of the underlying into this step.
    pub u: f64,
    /// Time to expiration in years.
    pub tau: f64,
    /// Per-step strike, for series whose contract changes between steps.
    pub strike: Option<f64>,
}

impl ExogenousInputs {
    pub fn new(s: f64, u: f64, tau: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("underlying price must be positive, got {s}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("time to expiry must be >= 0, got {tau}")));
        }
        if !u.is_finite() {
            return Err(Error::InvalidInput("non-finite return".into()));
        }
        Ok(Self { s, u, tau, strike: None })
    }

    pub fn with_strike(mut self, strike: f64) -> Self {
        self.strike = Some(strike);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Process-noise covariance.
    pub q: Matrix2<f64>,
    /// Measurement-noise variance.
    pub r_meas: f64,
}

impl NoiseSpec {
    /// Noise suitable for filtering: `q` symmetric positive definite, `r_meas > 0`.
    pub fn new(q: Matrix2<f64>, r_meas: f64) -> Result<Self> {
        let spec = Self { q, r_meas };
        spec.validate()?;
        Ok(spec)
    }

    /// Accepts zero or semi-definite noise, for simulation only.
    pub fn simulation(q: Matrix2<f64>, r_meas: f64) -> Self {
        Self { q, r_meas }
    }

    pub fn defaults_for_strike(strike: f64) -> Self {
        Self {
            q: Matrix2::new(1e-10, 0.0, 0.0, 1e-8),
            r_meas: (0.01 * strike).powi(2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::linalg::is_symmetric(&self.q, 1e-12) {
            return Err(Error::InvalidInput("process noise must be symmetric".into()));
        }
        if self.q.cholesky().is_none() {
            return Err(Error::Covariance("process noise must be positive definite".into()));
        }
        if !(self.r_meas > 0.0 && self.r_meas.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "measurement noise must be positive, got {}",
                self.r_meas
            )));
        }
        Ok(())
    }
}

/// How the risk-free rate evolves between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskTransition {
    /// `r' = r + η`.
    #[default]
    RandomWalk,
    /// `r' = r + (ω + αu² + βv) + η`: the rate is incremented by the new variance.
    Literal,
}

/// Additive-Gaussian state-space model `x' = f(x) + V`, `y = g(x) + W` over a 2-vector state.
pub trait StateSpaceModel: Send + Sync {
    fn transition_mean(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Vector2<f64>;

    fn transition_jacobian(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Matrix2<f64>;

    fn process_noise(&self) -> Matrix2<f64>;

    fn measure(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Result<f64>;

    /// Measurement gradient, substituting the nearest valid state when the
    /// exact gradient is degenerate.
    fn measurement_gradient(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Result<RowVector2<f64>>;

    fn measurement_noise(&self) -> f64;

    /// Projects a state onto the valid domain.
    fn project(&self, x: Vector2<f64>) -> Vector2<f64> {
        x
    }
}

/// Log of the Gaussian density `N(next; f(prev), Q)`.
pub fn transition_log_density<M: StateSpaceModel + ?Sized>(
    model: &M,
    next: &Vector2<f64>,
    prev: &Vector2<f64>,
    ex: &ExogenousInputs,
) -> Result<f64> {
    let q = model.process_noise();
    let chol = q
        .cholesky()
        .ok_or_else(|| Error::Covariance("process noise is singular".into()))?;
    let dev = next - model.transition_mean(prev, ex);
    let z = chol.l().solve_lower_triangular(&dev).expect("triangular factor is non-singular");
    let log_det = 2.0 * (chol.l()[(0, 0)].ln() + chol.l()[(1, 1)].ln());
    Ok(-0.5 * (2.0 * (2.0 * PI).ln() + log_det) - 0.5 * z.norm_squared())
}

/// Geometric Brownian motion step with `σ = √(annualization·v)`.
///
/// `shock = 0` gives the median path.
pub fn gbm_propagate(s: f64, r: f64, v: f64, dt: f64, annualization: f64, shock: f64) -> f64 {
    let sigma2 = annualization * v.max(0.0);
    s * ((r - 0.5 * sigma2) * dt + (sigma2 * dt).sqrt() * shock).exp()
}

/// Black-Scholes measurement over GARCH(1,1) variance dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub garch: GarchParams,
    pub contract: ContractSpec,
    pub noise: NoiseSpec,
    /// Step length in years.
    pub dt: f64,
    pub risk_transition: RiskTransition,
    pub v_floor: f64,
}

impl ModelSpec {
    pub fn new(garch: GarchParams, contract: ContractSpec, noise: NoiseSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("step length must be positive, got {dt}")));
        }
        Ok(Self {
            garch,
            contract,
            noise,
            dt,
            risk_transition: RiskTransition::default(),
            v_floor: V_FLOOR,
        })
    }

    pub fn with_risk_transition(mut self, mode: RiskTransition) -> Self {
        self.risk_transition = mode;
        self
    }

    pub fn annualization(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn bs_price(&self, state: &StateVector, ex: &ExogenousInputs) -> Result<f64> {
        bs_price(state, ex, &self.contract, self.annualization())
    }

    pub fn bs_measurement_jacobian(
        &self,
        state: &StateVector,
        ex: &ExogenousInputs,
    ) -> Result<RowVector2<f64>> {
        bs_measurement_jacobian(state, ex, &self.contract, self.annualization(), self.v_floor)
    }

    /// GARCH variance update plus the rate update, then the variance floor.
    pub fn transition(&self, state: &StateVector, ex: &ExogenousInputs, noise: &Vector2<f64>) -> StateVector {
        let mean = self.transition_mean(&state.to_vector(), ex);
        self.project(mean + noise).into()
    }

    pub fn transition_density(&self, next: &StateVector, prev: &StateVector, ex: &ExogenousInputs) -> Result<f64> {
        transition_log_density(self, &next.to_vector(), &prev.to_vector(), ex)
    }

    pub fn gbm_propagate(&self, s: f64, r: f64, v: f64, dt: f64, shock: f64) -> f64 {
        gbm_propagate(s, r, v, dt, self.annualization(), shock)
    }

    fn variance_mean(&self, v: f64, u: f64) -> f64 {
        self.garch.omega + self.garch.alpha * u * u + self.garch.beta * v
    }
}

impl StateSpaceModel for ModelSpec {
    fn transition_mean(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Vector2<f64> {
        let v = self.variance_mean(x[0], ex.u);
        let r = match self.risk_transition {
            RiskTransition::RandomWalk => x[1],
            RiskTransition::Literal => x[1] + v,
        };
        Vector2::new(v, r)
    }

    fn transition_jacobian(&self, _x: &Vector2<f64>, _ex: &ExogenousInputs) -> Matrix2<f64> {
        let beta = self.garch.beta;
        match self.risk_transition {
            RiskTransition::RandomWalk => Matrix2::new(beta, 0.0, 0.0, 1.0),
            RiskTransition::Literal => Matrix2::new(beta, 0.0, beta, 1.0),
        }
    }

    fn process_noise(&self) -> Matrix2<f64> {
        self.noise.q
    }

    fn measure(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Result<f64> {
        let state = StateVector::new(x[0].max(self.v_floor), x[1]);
        self.bs_price(&state, ex)
    }

    fn measurement_gradient(&self, x: &Vector2<f64>, ex: &ExogenousInputs) -> Result<RowVector2<f64>> {
        let state = StateVector::from(*x);
        match self.bs_measurement_jacobian(&state, ex) {
            Ok(g) => Ok(g),
            Err(Error::DegenerateGradient(reason)) => {
                log::trace!("measurement gradient substituted: {reason}");
                if ex.tau <= 0.0 {
                    return Ok(RowVector2::zeros());
                }
                let strike = ex.strike.unwrap_or(self.contract.strike);
                Ok(black_scholes::price_gradient(
                    ex.s,
                    strike,
                    state.v.max(self.v_floor),
                    state.r,
                    ex.tau,
                    self.annualization(),
                    self.contract.side,
                ))
            }
            Err(e) => Err(e),
        }
    }

    fn measurement_noise(&self) -> f64 {
        self.noise.r_meas
    }

    fn project(&self, x: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(x[0].max(self.v_floor), x[1])
    }
}
