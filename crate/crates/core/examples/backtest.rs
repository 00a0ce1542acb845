//! One-step-ahead forecasting backtest of all five strategies on the bundled
//! chain, writing the report files to `target/example-reports`.
//!
//! Run: `cargo run --release --example backtest`

use std::path::Path;

use adaptive_filter::backtest::{run_backtest, write_reports, Split, Strategy};
use adaptive_filter::config::Config;
use adaptive_filter::data::{build_series, load_chain, LiquidityRule};
use adaptive_filter::OptionSide;
use chrono::NaiveDate;

fn main() -> adaptive_filter::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cfg = Config::load(&root.join("data/sample_config.toml"))?;
    let chain = load_chain(&root.join("data/sample_chain.csv"), &cfg.data.columns, cfg.data.price)?;
    let expiry = chain.quotes[0].expiry_date;
    let series = cfg
        .simulation
        .strikes
        .iter()
        .map(|k| build_series(&chain.quotes, *k, expiry, OptionSide::Call, LiquidityRule::MaxVolume))
        .collect::<adaptive_filter::Result<Vec<_>>>()?;

    let split = Split { train_end: NaiveDate::from_ymd_opt(2019, 10, 31), test_end: None };
    let runs = run_backtest(&cfg, &series, &Strategy::ALL, &split)?;
    let out = root.join("../../target/example-reports");
    let bundle = write_reports(&out, &runs, 1.0 / cfg.dt)?;

    println!("{:<4} {:>7} {:>10} {:>13}", "", "strike", "rmse_fit", "rmse_forecast");
    for (st, k, fit, fc) in &bundle.rmse_table {
        println!("{st:<4} {k:>7} {fit:>10.5} {fc:>13.5}");
    }
    for (label, k, c) in &bundle.frequency_table {
        println!("{label:<15} K={k:<5} EKF {:>3} UKF {:>3} PF {:>3}", c[0], c[1], c[2]);
    }
    println!("reports in {}", out.display());
    Ok(())
}
