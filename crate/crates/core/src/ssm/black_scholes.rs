//! European option pricing and the measurement gradient with respect to the
//! filter state `(v, r)`.
//!
//! The state carries per-step variance `v`; pricing uses the annualized
//! volatility `σ = √(A·v)` with annualization factor `A = 1/dt`.

use nalgebra::RowVector2;
use statrs::function::erf::erfc;

use super::{ContractSpec, ExogenousInputs, OptionSide, StateVector};
use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Closed-form price from annualized inputs.
///
/// `tau = 0` returns intrinsic value; `sigma·√tau = 0` returns the discounted
/// intrinsic limit.
pub fn black_scholes(s: f64, k: f64, r: f64, sigma: f64, tau: f64, side: OptionSide) -> f64 {
    if tau <= 0.0 {
        return match side {
            OptionSide::Call => (s - k).max(0.0),
            OptionSide::Put => (k - s).max(0.0),
        };
    }
    let discount = (-r * tau).exp();
    let k_disc = k * discount;
    let vol_sqrt_t = sigma * tau.sqrt();
    if vol_sqrt_t <= 0.0 {
        return match side {
            OptionSide::Call => (s - k_disc).max(0.0),
            OptionSide::Put => (k_disc - s).max(0.0),
        };
    }
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * tau) / vol_sqrt_t;
    let d2 = d1 - vol_sqrt_t;
    let price = match side {
        OptionSide::Call => s * norm_cdf(d1) - k_disc * norm_cdf(d2),
        OptionSide::Put => k_disc * norm_cdf(-d2) - s * norm_cdf(-d1),
    };
    price.max(0.0)
}

fn check_inputs(state: &StateVector, ex: &ExogenousInputs, strike: f64) -> Result<()> {
    let finite = [state.v, state.r, ex.s, ex.tau, strike].iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::InvalidInput("non-finite pricing input".into()));
    }
    if ex.s <= 0.0 || strike <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "spot {} and strike {strike} must be positive",
            ex.s
        )));
    }
    if ex.tau < 0.0 {
        return Err(Error::InvalidInput(format!("negative time to expiry {}", ex.tau)));
    }
    Ok(())
}

/// Option price for state `(v, r)`. Negative `v` is treated as zero variance.
pub fn bs_price(
    state: &StateVector,
    ex: &ExogenousInputs,
    contract: &ContractSpec,
    annualization: f64,
) -> Result<f64> {
    let strike = ex.strike.unwrap_or(contract.strike);
    check_inputs(state, ex, strike)?;
    let sigma = (annualization * state.v.max(0.0)).sqrt();
    Ok(black_scholes(ex.s, strike, state.r, sigma, ex.tau, contract.side))
}

/// `[∂price/∂v, ∂price/∂r]` from the analytic vega and rho, valid for `v > 0`, `tau > 0`.
pub(crate) fn price_gradient(
    s: f64,
    k: f64,
    v: f64,
    r: f64,
    tau: f64,
    annualization: f64,
    side: OptionSide,
) -> RowVector2<f64> {
    let sigma = (annualization * v).sqrt();
    let sqrt_t = tau.sqrt();
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * tau) / (sigma * sqrt_t);
    let d2 = d1 - sigma * sqrt_t;
    let vega = s * norm_pdf(d1) * sqrt_t;
    let k_disc_t = k * tau * (-r * tau).exp();
    let rho = match side {
        OptionSide::Call => k_disc_t * norm_cdf(d2),
        OptionSide::Put => -k_disc_t * norm_cdf(-d2),
    };
    // dσ/dv = A / (2σ)
    RowVector2::new(vega * annualization / (2.0 * sigma), rho)
}

/// Measurement gradient `[∂BS/∂v, ∂BS/∂r]`.
///
/// Fails with [`Error::DegenerateGradient`] when `v ≤ v_floor` or `tau = 0`;
/// callers substitute the floored state.
pub fn bs_measurement_jacobian(
    state: &StateVector,
    ex: &ExogenousInputs,
    contract: &ContractSpec,
    annualization: f64,
    v_floor: f64,
) -> Result<RowVector2<f64>> {
    let strike = ex.strike.unwrap_or(contract.strike);
    check_inputs(state, ex, strike)?;
    if state.v <= v_floor {
        return Err(Error::DegenerateGradient(format!(
            "variance {} at or below floor {v_floor}",
            state.v
        )));
    }
    if ex.tau <= 0.0 {
        return Err(Error::DegenerateGradient("zero time to expiry".into()));
    }
    Ok(price_gradient(ex.s, strike, state.v, state.r, ex.tau, annualization, contract.side))
}
