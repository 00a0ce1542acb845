//! Adaptive state estimation for option prices.
//!
//! A bank of nonlinear Bayesian filters (EKF, UKF, bootstrap PF) tracks the
//! hidden variance and risk-free rate of a Black-Scholes model whose variance
//! follows GARCH(1,1). Each filter is scored every step against a
//! particle-approximated posterior Cramér-Rao lower bound, and the
//! best-scoring filter (or per-component filters) supplies the estimate.
//!
//! Modules:
//! - [`ssm`]: the state-space model, pricing and GARCH calibration
//! - [`filters`]: EKF, UKF, particle filter and systematic resampling
//! - [`pcrlb`]: the particle approximation of the Fisher information recursion
//! - [`switching`]: the performance metric and switching strategies
//! - [`data`]: option-chain ingestion and synthetic ground truth
//! - [`backtest`]: one-step-ahead forecasting, RMSE and report files

pub mod backtest;
pub mod config;
pub mod data;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod pcrlb;
pub mod rng;
pub mod ssm;
pub mod switching;

pub use error::{Error, Result};
pub use filters::{FilterId, GaussianBelief, ParticleCloud};
pub use pcrlb::FisherState;
pub use ssm::{ContractSpec, ExogenousInputs, ModelSpec, OptionSide, StateSpaceModel, StateVector};
pub use switching::{run_adaptive_estimation, EstimationConfig, SwitchDecision, SwitchMode};
