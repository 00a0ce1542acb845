//! Backtest behaviour on synthetic data.

use adaptive_filter::backtest::{forecast_one_step, run_strategy, Split, Strategy};
use adaptive_filter::config::Config;
use adaptive_filter::data::{build_series, synthetic_chain, LiquidityRule};
use adaptive_filter::filters::ekf_update;
use adaptive_filter::ssm::{GarchParams, NoiseSpec};
use adaptive_filter::switching::{Chosen, SwitchDecision, SwitchMode};
use adaptive_filter::{ContractSpec, ExogenousInputs, FilterId, GaussianBelief, ModelSpec, OptionSide, StateVector};
use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_config() -> Config {
    let mut cfg = Config::default();
    cfg.pcrlb.n_particles = 100;
    cfg.filters.n_particles = 300;
    cfg.simulation.strikes = vec![2500.0];
    cfg
}

#[test]
fn record_count_matches_test_period() {
    let cfg = small_config();
    let chain = synthetic_chain(&cfg, 40, 1).unwrap();
    let series = build_series(&chain.quotes, 2500.0, chain.quotes[0].expiry_date, OptionSide::Call, LiquidityRule::MaxVolume)
        .unwrap();
    let split = Split { train_end: Some(chain.dates[9]), test_end: Some(chain.dates[29]) };
    let run = run_strategy(&cfg, &series, Strategy::Ekf, &split).unwrap();
    assert_eq!(run.records.len(), 20);
    assert!(run.records.windows(2).all(|w| w[0].t < w[1].t));
    assert!(run.records.iter().all(|r| r.forecast_price.is_finite()));
    assert!(run.rmse_fit >= 0.0 && run.rmse_forecast >= 0.0);
}

#[test]
fn contract_expiry_truncates_cleanly() {
    let mut cfg = small_config();
    cfg.simulation.expiry_step = 20;
    let chain = synthetic_chain(&cfg, 30, 2).unwrap();
    let series = build_series(&chain.quotes, 2500.0, chain.quotes[0].expiry_date, OptionSide::Call, LiquidityRule::MaxVolume)
        .unwrap();
    let run = run_strategy(&cfg, &series, Strategy::Ekf, &Split::default()).unwrap();
    assert!(run.truncated);
    assert!(run.records.len() < 29);
}

/// Forecast errors from an EKF on a static underlying with exact prices and
/// process noise `q`; returns their sample variance.
fn forecast_error_variance(q: f64, seed: u64) -> f64 {
    let model = ModelSpec::new(
        GarchParams::new(2e-6, 0.08, 0.9).unwrap(),
        ContractSpec::new(2500.0, 400, OptionSide::Call).unwrap(),
        NoiseSpec::new(Matrix2::new(q, 0.0, 0.0, q * 100.0), 1e-6).unwrap(),
        1.0 / 252.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lq = model.noise.q.cholesky().unwrap().l();
    let mut x = StateVector::new(1e-4, 0.02);
    let mut belief = GaussianBelief::new(x.to_vector(), Matrix2::new(1e-12, 0.0, 0.0, 1e-10));
    let mut errors = Vec::new();
    let mut prev: Option<(SwitchDecision, ExogenousInputs)> = None;
    for t in 0..120 {
        let ex = ExogenousInputs::new(2600.0, 0.0, (380 - t) as f64 / 252.0).unwrap();
        let w = lq * Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        x = model.transition(&x, &ex, &w);
        let c = model.bs_price(&x, &ex).unwrap();
        if let Some((d, ex_prev)) = prev {
            errors.push(c - forecast_one_step(&d, &ex_prev, &model, t).unwrap());
        }
        belief = ekf_update(&belief, c, &ex, &model).unwrap();
        let d = SwitchDecision {
            mode: SwitchMode::Average,
            chosen: Chosen::Average(FilterId::Ekf),
            estimate: belief.mean,
            cov: belief.cov,
        };
        prev = Some((d, ex));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn forecast_error_variance_shrinks_with_process_noise() {
    let grid = [1e-9, 1e-10, 1e-11];
    let avg = |q: f64| (0..10).map(|s| forecast_error_variance(q, s)).sum::<f64>() / 10.0;
    let v: Vec<f64> = grid.iter().map(|q| avg(*q)).collect();
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
}
