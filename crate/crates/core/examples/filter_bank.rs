//! EKF, UKF and bootstrap PF on one synthetic Black-Scholes + GARCH path,
//! each run on its own, compared against the true variance.
//!
//! Run: `cargo run --release --example filter_bank`

use adaptive_filter::config::Config;
use adaptive_filter::data::generate_synthetic;
use adaptive_filter::switching::SwitchMode;
use adaptive_filter::{run_adaptive_estimation, ContractSpec, FilterId, OptionSide, StateVector};

fn main() -> adaptive_filter::Result<()> {
    let cfg = Config::default();
    let model = cfg.model_spec(ContractSpec::new(2500.0, 200, OptionSide::Call)?)?;
    let truth = generate_synthetic(&model, StateVector::new(cfg.v0, cfg.r0), 150, 2800.0, 3)?;
    let annual = |v: f64| (v.max(0.0) / cfg.dt).sqrt();

    for id in FilterId::ALL {
        let run = run_adaptive_estimation(
            &truth.observations,
            &truth.exogenous,
            &model,
            &cfg.estimation_config(vec![id], SwitchMode::Average),
        )?;
        let est = run.estimates();
        let vol_rmse = (est.iter().zip(&truth.states).map(|(e, x)| (annual(e[0]) - annual(x.v)).powi(2)).sum::<f64>()
            / est.len() as f64)
            .sqrt();
        let last = est.last().expect("non-empty run");
        println!(
            "{id:>3}: volatility RMSE {vol_rmse:.4}; final vol {:.4} (true {:.4}); fallbacks {}",
            annual(last[0]),
            annual(truth.states.last().expect("non-empty").v),
            run.fallbacks
        );
    }
    Ok(())
}
