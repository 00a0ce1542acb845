//! Annualized volatility from an AAF run joined by date against the true
//! volatility of the bundled synthetic chain.
//!
//! Run: `cargo run --release --example vol_report`

use std::path::Path;

use adaptive_filter::backtest::{run_strategy, vol_report, Split, Strategy};
use adaptive_filter::config::Config;
use adaptive_filter::data::{build_series, load_chain, LiquidityRule};
use adaptive_filter::OptionSide;
use chrono::NaiveDate;

fn main() -> adaptive_filter::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cfg = Config::load(&root.join("data/sample_config.toml"))?;
    let chain = load_chain(&root.join("data/sample_chain.csv"), &cfg.data.columns, cfg.data.price)?;
    let series = build_series(&chain.quotes, 2500.0, chain.quotes[0].expiry_date, OptionSide::Call, LiquidityRule::MaxVolume)?;
    let run = run_strategy(&cfg, &series, Strategy::Aaf, &Split::default())?;

    let estimates: Vec<(NaiveDate, f64)> = run.records.iter().map(|r| (r.date, r.estimate.v)).collect();
    let truth: Vec<(NaiveDate, f64)> =
        chain.quotes.iter().filter(|q| q.strike == 2500.0).filter_map(|q| Some((q.quote_date, q.implied_vol?))).collect();
    let report = vol_report(&estimates, &[("true".to_string(), truth)], 1.0 / cfg.dt)?;

    println!("date        estimate  true");
    for (_, d, est, ext) in report.joined.iter().step_by(10) {
        println!("{d}  {est:.4}    {ext:.4}");
    }
    println!("{} joined, {} unmatched", report.joined.len(), report.unmatched.len());
    Ok(())
}
