//! Simulates GARCH(1,1) returns and recovers the parameters by
//! variance-targeting likelihood.
//!
//! Run: `cargo run --release --example calibrate_garch`

use adaptive_filter::ssm::{calibrate_variance_targeting, garch_log_likelihood, GarchParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> adaptive_filter::Result<()> {
    let truth = GarchParams::new(2e-6, 0.08, 0.9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut v = truth.long_run_variance();
    let returns: Vec<f64> = (0..3000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let u = v.sqrt() * z;
            v = truth.omega + truth.alpha * u * u + truth.beta * v;
            u
        })
        .collect();

    let fit = calibrate_variance_targeting(&returns, false)?;
    let v0 = truth.long_run_variance();
    println!("true:   omega={:.3e} alpha={:.4} beta={:.4}", truth.omega, truth.alpha, truth.beta);
    println!("fitted: omega={:.3e} alpha={:.4} beta={:.4}", fit.omega, fit.alpha, fit.beta);
    println!(
        "log-likelihood true {:.2}, fitted {:.2}",
        garch_log_likelihood(&truth, &returns, v0),
        garch_log_likelihood(&fit, &returns, v0)
    );
    Ok(())
}
