//! The particle-approximated bound on a linear-Gaussian model, where the
//! exact answer is the Kalman covariance.
//!
//! Run: `cargo run --release --example pcrlb_linear`

use adaptive_filter::filters::ekf_update;
use adaptive_filter::pcrlb::{pcrlb_step, FisherState};
use adaptive_filter::ssm::LinearGaussianModel;
use adaptive_filter::{ExogenousInputs, FilterId, GaussianBelief};
use nalgebra::{Matrix2, RowVector2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> adaptive_filter::Result<()> {
    let model = LinearGaussianModel::new(
        Matrix2::new(0.9, 0.1, 0.0, 0.95),
        RowVector2::new(1.0, 0.5),
        Matrix2::new(0.1, 0.02, 0.02, 0.1),
        4.0,
    );
    let ex = ExogenousInputs::new(1.0, 0.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = Vector2::new(1.0, -1.0);
    let mut belief = GaussianBelief::new(x, Matrix2::identity());
    let mut fisher = FisherState::from_prior(&belief.cov, FilterId::Ekf)?;

    println!("  t   tr(J^-1)    tr(P_KF)");
    for t in 1..=20 {
        x = model.a * x + model.q.cholesky().expect("SPD").l() * Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let y = (model.c * x)[0] + model.r.sqrt() * rng.sample::<f64, _>(StandardNormal);
        fisher = pcrlb_step(&fisher, &belief, y, &ex, &model, 1000, &mut rng)?;
        belief = ekf_update(&belief, y, &ex, &model)?;
        println!("{t:3}  {:.8}  {:.8}", fisher.j_inv.trace(), belief.cov.trace());
    }
    Ok(())
}
