//! Loads the bundled option chain, reports rejected rows, and builds one
//! contract series per strike plus the max-volume series.
//!
//! Run: `cargo run --example load_chain [path/to/chain.csv]`

use std::path::PathBuf;

use adaptive_filter::config::{ColumnMap, PriceField};
use adaptive_filter::data::{build_series, load_chain, max_volume_series, LiquidityRule};
use adaptive_filter::OptionSide;

fn main() -> adaptive_filter::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample_chain.csv"));
    let chain = load_chain(&path, &ColumnMap::default(), PriceField::Mid)?;
    println!("{}: {} quotes, {} rejected", path.display(), chain.quotes.len(), chain.rejects.len());
    for r in chain.rejects.iter().take(5) {
        println!("  line {}: {}", r.line, r.reason);
    }

    let expiry = chain.quotes.first().map(|q| q.expiry_date).expect("chain has quotes");
    for strike in [2000.0, 2500.0, 3000.0] {
        let s = build_series(&chain.quotes, strike, expiry, OptionSide::Call, LiquidityRule::MaxVolume)?;
        let first = &s.points[0];
        println!(
            "K={strike}: {} dates from {}, tau0={:.4}, first price {}",
            s.len(),
            first.quote.quote_date,
            first.ex.tau,
            first.quote.price
        );
    }
    let mv = max_volume_series(&chain.quotes)?;
    println!("max-volume series: {} dates, first strike {}", mv.len(), mv.points[0].quote.strike);
    Ok(())
}
