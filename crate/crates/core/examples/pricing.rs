//! Black-Scholes prices and the measurement gradient with respect to (v, r).
//!
//! Run: `cargo run --example pricing`

use adaptive_filter::ssm::{black_scholes, bs_measurement_jacobian, bs_price, V_FLOOR};
use adaptive_filter::{ContractSpec, ExogenousInputs, OptionSide, StateVector};

fn main() -> adaptive_filter::Result<()> {
    println!("S=K=100 r=5% sigma=20% tau=1: call {:.6}", black_scholes(100.0, 100.0, 0.05, 0.2, 1.0, OptionSide::Call));

    let dt = 1.0 / 252.0;
    let annualization = 1.0 / dt;
    let state = StateVector::new(0.2f64.powi(2) * dt, 0.02);
    let ex = ExogenousInputs::new(2800.0, 0.0, 0.5)?;
    for strike in [2000.0, 2500.0, 3000.0] {
        let contract = ContractSpec::new(strike, 126, OptionSide::Call)?;
        let price = bs_price(&state, &ex, &contract, annualization)?;
        let grad = bs_measurement_jacobian(&state, &ex, &contract, annualization, V_FLOOR)?;
        println!("K={strike}: price {price:10.4}  dC/dv {:12.1}  dC/dr {:9.3}", grad[0], grad[1]);
    }
    Ok(())
}
