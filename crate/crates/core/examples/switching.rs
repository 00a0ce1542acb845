//! Average-case (AAF) and best-case (ABF) switching over the full filter bank
//! on a synthetic path, with the filter-frequency tables.
//!
//! Run: `cargo run --release --example switching`

use adaptive_filter::config::Config;
use adaptive_filter::data::generate_synthetic;
use adaptive_filter::switching::SwitchMode;
use adaptive_filter::{run_adaptive_estimation, ContractSpec, FilterId, OptionSide, StateVector};

fn main() -> adaptive_filter::Result<()> {
    let cfg = Config::default();
    let model = cfg.model_spec(ContractSpec::new(2500.0, 200, OptionSide::Call)?)?;
    let truth = generate_synthetic(&model, StateVector::new(cfg.v0, cfg.r0), 150, 2800.0, 8)?;

    println!("{:<16} {:>5} {:>5} {:>5}", "", "EKF", "UKF", "PF");
    for (label, mode) in [("AAF", SwitchMode::Average), ("ABF", SwitchMode::Best)] {
        let est = cfg.estimation_config(FilterId::ALL.to_vec(), mode);
        let run = run_adaptive_estimation(&truth.observations, &truth.exogenous, &model, &est)?;
        for (row, c) in run.frequency(label, ["Volatility", "Interest"]).rows {
            println!("{row:<16} {:>5} {:>5} {:>5}", c[0], c[1], c[2]);
        }
        let last = run.steps.last().expect("non-empty run");
        println!("  final decision {} -> v={:.3e} r={:.4}", last.decision.chosen.label(), last.decision.estimate[0], last.decision.estimate[1]);
    }
    Ok(())
}
