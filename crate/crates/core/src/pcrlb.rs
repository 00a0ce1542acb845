//! Particle approximation of the posterior Fisher information recursion.
//!
//! Each filter's Gaussian posterior seeds a particle cloud; the cloud is
//! propagated and weighted against the next observation, joint smoothing
//! pairs are drawn, and the expectation blocks `D¹¹`, `D¹²`, `D²²` are
//! averaged over them. `J_{t+1} = D²² − D¹²ᵀ (J_t + D¹¹)⁻¹ D¹²`.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{
    normalize_log_weights, propagate_and_weight, systematic_resample, FilterId, GaussianBelief, ParticleCloud,
};
use crate::linalg::{floor_psd, psd_factor, regularized_inverse, symmetrize, EIGEN_FLOOR};
use crate::ssm::{ExogenousInputs, StateSpaceModel};

/// Relative tolerance between the inversion-lemma `J⁻¹` and a direct inverse.
pub const LEMMA_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherState {
    /// Posterior Fisher information `J_t`.
    pub j: Matrix2<f64>,
    /// Lower bound `J_t⁻¹`.
    pub j_inv: Matrix2<f64>,
    pub filter: FilterId,
}

impl FisherState {
    /// `J₀ = P₀⁻¹` for a Gaussian prior.
    pub fn from_prior(p0: &Matrix2<f64>, filter: FilterId) -> Result<Self> {
        let p0 = symmetrize(p0);
        let j = symmetrize(&regularized_inverse(&p0, "initial covariance")?);
        Ok(Self { j, j_inv: p0, filter })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DTriple {
    pub d11: Matrix2<f64>,
    pub d12: Matrix2<f64>,
    pub d22: Matrix2<f64>,
}

/// Joint particles `(X_t, X_{t+1})` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedPair {
    pub current: Vec<Vector2<f64>>,
    pub next: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Smoothing {
    /// Index-paired particles carrying the joint smoothing weights.
    pub weighted: SmoothedPair,
    /// Equally weighted pairs drawn from `weighted`.
    pub resampled: SmoothedPair,
    /// All joint weights vanished and uniform weights were used instead.
    pub degenerate: bool,
}

/// `n` draws from `N(mean, cov)`, variance-floored, uniformly weighted.
pub fn seed_particles<M: StateSpaceModel + ?Sized, R: Rng + ?Sized>(
    belief: &GaussianBelief,
    n: usize,
    model: &M,
    rng: &mut R,
) -> Result<ParticleCloud> {
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 particles, got {n}")));
    }
    if !belief.is_finite() {
        return Err(Error::InvalidInput("non-finite belief".into()));
    }
    let factor = psd_factor(&floor_psd(&belief.cov, EIGEN_FLOOR))?;
    let particles = (0..n)
        .map(|_| {
            let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            model.project(belief.mean + factor * z)
        })
        .collect();
    Ok(ParticleCloud::uniform(particles))
}

/// Joint smoothing weights over index-paired particles, followed by
/// systematic resampling of the pairs.
///
/// `ζᵢ ∝ p(X¹ᵢ | X⁰ᵢ) / Σₘ p(X¹ᵢ | X⁰ₘ)`, normalized to sum to one.
pub fn smoothing_weights<M: StateSpaceModel + ?Sized, R: Rng + ?Sized>(
    filtered_t: &ParticleCloud,
    filtered_t1: &ParticleCloud,
    ex: &ExogenousInputs,
    model: &M,
    rng: &mut R,
) -> Result<Smoothing> {
    let n = filtered_t.len();
    if n == 0 || filtered_t1.len() != n {
        return Err(Error::Precondition(format!(
            "smoothing needs two clouds of equal non-zero size, got {} and {}",
            n,
            filtered_t1.len()
        )));
    }
    let chol = model
        .process_noise()
        .cholesky()
        .ok_or_else(|| Error::Covariance("process noise is singular".into()))?;
    let l = chol.l();
    let whiten = |x: Vector2<f64>| l.solve_lower_triangular(&x).expect("non-singular factor");

    // Whitened transition means of the time-t particles, struct-of-arrays.
    let (mu0, mu1): (Vec<f64>, Vec<f64>) = filtered_t
        .particles
        .iter()
        .map(|x| {
            let m = whiten(model.transition_mean(x, ex));
            (m[0], m[1])
        })
        .unzip();

    let ln_n = (n as f64).ln();
    let log_zeta: Vec<f64> = filtered_t1
        .particles
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let z = whiten(*x);
            let (z0, z1) = (z[0], z[1]);
            let d2 = |m: usize| {
                let (a, b) = (z0 - mu0[m], z1 - mu1[m]);
                a * a + b * b
            };
            // Streaming log-sum-exp: the shift tracks the smallest distance seen.
            let own = d2(i);
            let mut shift = own;
            let mut acc = 0.0;
            for m in 0..n {
                let d = d2(m);
                if d < shift {
                    acc *= (-0.5 * (shift - d)).exp();
                    shift = d;
                }
                acc += (-0.5 * (d - shift)).exp();
            }
            -0.5 * (own - shift) - ln_n - acc.ln()
        })
        .collect();

    let mut weights = Vec::with_capacity(n);
    let degenerate = !normalize_log_weights(&log_zeta, &mut weights);
    if degenerate {
        log::warn!("joint smoothing weights degenerate; using uniform weights");
        weights = vec![1.0 / n as f64; n];
    }
    let weighted = SmoothedPair {
        current: filtered_t.particles.clone(),
        next: filtered_t1.particles.clone(),
        weights,
    };
    let idx = systematic_resample(&weighted.weights, n, rng)?;
    let resampled = SmoothedPair {
        current: idx.iter().map(|&i| weighted.current[i]).collect(),
        next: idx.iter().map(|&i| weighted.next[i]).collect(),
        weights: vec![1.0 / n as f64; n],
    };
    Ok(Smoothing { weighted, resampled, degenerate })
}

/// Particle averages of the information blocks:
/// `D¹¹ = E[∇fᵀ Q⁻¹ ∇f]`, `D¹² = −E[∇fᵀ] Q⁻¹` over the smoothed time-t
/// particles and `D²² = Q⁻¹ + E[∇gᵀ R⁻¹ ∇g]` over the predicted particles.
pub fn d_matrices<M: StateSpaceModel + ?Sized>(
    smoothed: &SmoothedPair,
    predicted_t1: &ParticleCloud,
    ex: &ExogenousInputs,
    model: &M,
) -> Result<DTriple> {
    if smoothed.current.is_empty() || predicted_t1.is_empty() {
        return Err(Error::Precondition("empty particle set".into()));
    }
    let q_inv = model
        .process_noise()
        .try_inverse()
        .ok_or_else(|| Error::Singular("process noise".into()))?;
    let r = model.measurement_noise();
    if !(r > 0.0) {
        return Err(Error::Singular("measurement noise".into()));
    }

    let mut d11 = Matrix2::zeros();
    let mut grad_f_mean = Matrix2::zeros();
    for (x, w) in smoothed.current.iter().zip(&smoothed.weights) {
        let f = model.transition_jacobian(x, ex);
        d11 += *w * f.transpose() * q_inv * f;
        grad_f_mean += *w * f;
    }
    let d12 = -grad_f_mean.transpose() * q_inv;

    let mut info = Matrix2::zeros();
    for (x, w) in predicted_t1.particles.iter().zip(&predicted_t1.weights) {
        let h = model.measurement_gradient(x, ex)?;
        info += *w * h.transpose() * h / r;
    }
    let d = DTriple { d11: symmetrize(&d11), d12, d22: symmetrize(&(q_inv + info)) };
    if !d.d11.iter().chain(d.d12.iter()).chain(d.d22.iter()).all(|x| x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite information block".into()));
    }
    Ok(d)
}

/// One step of the information recursion. `J⁻¹` comes from the matrix
/// inversion lemma and is checked against a direct inverse.
pub fn pfim_step(prev: &FisherState, d: &DTriple) -> Result<FisherState> {
    let m = prev.j + d.d11;
    let m_inv = regularized_inverse(&m, "J + D11")?;
    let j = floor_psd(&(d.d22 - d.d12.transpose() * m_inv * d.d12), EIGEN_FLOOR);

    let d22_inv = regularized_inverse(&d.d22, "D22")?;
    let inner = d.d12 * d22_inv * d.d12.transpose() - m;
    let inner_inv = regularized_inverse(&inner, "inversion-lemma core")?;
    let lemma = d22_inv - d22_inv * d.d12.transpose() * inner_inv * d.d12 * d22_inv;
    let direct = regularized_inverse(&j, "J")?;
    let scale = direct.amax().max(f64::MIN_POSITIVE);
    let j_inv = if (lemma - direct).amax() <= LEMMA_TOLERANCE * scale {
        lemma
    } else {
        log::warn!(
            "{}: inversion-lemma bound deviates from direct inverse by {:.3e}; using direct inverse",
            prev.filter,
            (lemma - direct).amax() / scale
        );
        direct
    };
    Ok(FisherState { j, j_inv: floor_psd(&j_inv, EIGEN_FLOOR), filter: prev.filter })
}

/// Advances one filter's bound from `J_t` to `J_{t+1}` using its posterior
/// at `t` and the observation at `t+1`.
#[allow(clippy::too_many_arguments)]
pub fn pcrlb_step<M: StateSpaceModel + ?Sized, R: Rng + ?Sized>(
    prev: &FisherState,
    belief: &GaussianBelief,
    next_obs: f64,
    ex_next: &ExogenousInputs,
    model: &M,
    n: usize,
    rng: &mut R,
) -> Result<FisherState> {
    let filtered_t = seed_particles(belief, n, model, rng)?;
    let (weighted, _) = propagate_and_weight(&filtered_t, next_obs, ex_next, model, rng)?;
    let predicted = ParticleCloud::uniform(weighted.particles.clone());
    let idx = systematic_resample(&weighted.weights, n, rng)?;
    let filtered_t1 = ParticleCloud::uniform(idx.into_iter().map(|i| weighted.particles[i]).collect());
    let smoothing = smoothing_weights(&filtered_t, &filtered_t1, ex_next, model, rng)?;
    let d = d_matrices(&smoothing.resampled, &predicted, ex_next, model)?;
    pfim_step(prev, &d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssm::{
        transition_log_density, ContractSpec, GarchParams, LinearGaussianModel, ModelSpec, NoiseSpec, OptionSide,
    };
    use nalgebra::RowVector2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ex() -> ExogenousInputs {
        ExogenousInputs::new(1.0, 0.0, 1.0).unwrap()
    }

    fn linear() -> LinearGaussianModel {
        LinearGaussianModel::new(
            Matrix2::new(0.9, 0.1, 0.0, 0.95),
            RowVector2::new(1.0, 0.5),
            Matrix2::new(0.2, 0.05, 0.05, 0.1),
            0.5,
        )
    }

    #[test]
    fn scalar_analogue_recursion() {
        // a = c = q = r = 1 embedded on the diagonal, J_t = 1.
        let prev = FisherState { j: Matrix2::identity(), j_inv: Matrix2::identity(), filter: FilterId::Ekf };
        let d = DTriple {
            d11: Matrix2::identity(),
            d12: -Matrix2::identity(),
            d22: Matrix2::identity() * 2.0,
        };
        let next = pfim_step(&prev, &d).unwrap();
        assert!((next.j - Matrix2::identity() * 1.5).amax() < 1e-15);
        assert!((next.j_inv - Matrix2::identity() / 1.5).amax() < 1e-15);
    }

    #[test]
    fn zero_cross_term_gives_d22() {
        let prev = FisherState::from_prior(&Matrix2::new(2.0, 0.3, 0.3, 1.0), FilterId::Ukf).unwrap();
        let d22 = Matrix2::new(4.0, 1.0, 1.0, 3.0);
        let d = DTriple { d11: Matrix2::identity(), d12: Matrix2::zeros(), d22 };
        let next = pfim_step(&prev, &d).unwrap();
        assert!((next.j - d22).amax() < 1e-14);
        assert!((next.j_inv * next.j - Matrix2::identity()).amax() < 1e-6);
    }

    #[test]
    fn initial_information_is_prior_inverse() {
        let p0 = Matrix2::new(2.0, 0.5, 0.5, 1.0);
        let f = FisherState::from_prior(&p0, FilterId::Pf).unwrap();
        assert!((f.j * p0 - Matrix2::identity()).amax() < 1e-14);
        assert_eq!(f.j_inv, p0);
    }

    #[test]
    fn constant_gradients_make_blocks_exact() {
        let m = linear();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let belief = GaussianBelief::new(Vector2::new(0.5, -0.5), Matrix2::identity());
        let cloud = seed_particles(&belief, 64, &m, &mut rng).unwrap();
        let pair = SmoothedPair { current: cloud.particles.clone(), next: cloud.particles.clone(), weights: cloud.weights.clone() };
        let d = d_matrices(&pair, &cloud, &ex(), &m).unwrap();
        let q_inv = m.q.try_inverse().unwrap();
        assert!((d.d11 - m.a.transpose() * q_inv * m.a).amax() < 1e-12);
        assert!((d.d12 + m.a.transpose() * q_inv).amax() < 1e-12);
        assert!((d.d22 - (q_inv + m.c.transpose() * m.c / m.r)).amax() < 1e-12);
    }

    #[test]
    fn bs_garch_transition_blocks_are_exact() {
        let model = ModelSpec::new(
            GarchParams::new(2e-6, 0.08, 0.9).unwrap(),
            ContractSpec::new(2500.0, 300, OptionSide::Call).unwrap(),
            NoiseSpec::defaults_for_strike(2500.0),
            1.0 / 252.0,
        )
        .unwrap();
        let ex = ExogenousInputs::new(2800.0, 0.01, 0.8).unwrap();
        let belief = GaussianBelief::new(Vector2::new(1e-4, 0.02), Matrix2::new(1e-10, 0.0, 0.0, 1e-6));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = seed_particles(&belief, 100, &model, &mut rng).unwrap();
        let pair = SmoothedPair { current: cloud.particles.clone(), next: cloud.particles.clone(), weights: cloud.weights.clone() };
        let d = d_matrices(&pair, &cloud, &ex, &model).unwrap();
        let f = Matrix2::new(0.9, 0.0, 0.0, 1.0);
        let q_inv = model.noise.q.try_inverse().unwrap();
        let expect = f.transpose() * q_inv * f;
        assert!(((d.d11 - expect).amax() / expect.amax()) < 1e-12);
        assert!(((d.d12 + f.transpose() * q_inv).amax() / q_inv.amax()) < 1e-12);
    }

    #[test]
    fn single_pair_has_unit_weight() {
        let m = linear();
        let a = ParticleCloud::uniform(vec![Vector2::new(0.1, 0.2)]);
        let b = ParticleCloud::uniform(vec![Vector2::new(0.3, 0.1)]);
        let s = smoothing_weights(&a, &b, &ex(), &m, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.weighted.weights, vec![1.0]);
        assert_eq!(s.resampled.current, vec![Vector2::new(0.1, 0.2)]);
    }

    #[test]
    fn flat_transition_density_gives_uniform_weights() {
        let mut m = linear();
        m.q = Matrix2::identity() * 1e12;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let belief = GaussianBelief::new(Vector2::zeros(), Matrix2::identity());
        let a = seed_particles(&belief, 20, &m, &mut rng).unwrap();
        let b = seed_particles(&belief, 20, &m, &mut rng).unwrap();
        let s = smoothing_weights(&a, &b, &ex(), &m, &mut rng).unwrap();
        assert!(s.weighted.weights.iter().all(|w| (w - 0.05).abs() < 1e-10));
    }

    #[test]
    fn small_n_weights_match_direct_evaluation() {
        let m = linear();
        let a = ParticleCloud::uniform(vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(0.5, -0.2),
            Vector2::new(-0.3, 0.4),
            Vector2::new(1.0, 1.0),
        ]);
        let b = ParticleCloud::uniform(vec![
            Vector2::new(0.1, 0.0),
            Vector2::new(0.2, 0.3),
            Vector2::new(-0.5, 0.1),
            Vector2::new(0.9, 0.7),
        ]);
        let s = smoothing_weights(&a, &b, &ex(), &m, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let n = 4.0;
        let zeta: Vec<f64> = (0..4)
            .map(|i| {
                let own = transition_log_density(&m, &b.particles[i], &a.particles[i], &ex()).unwrap().exp();
                let all: f64 = (0..4)
                    .map(|k| transition_log_density(&m, &b.particles[i], &a.particles[k], &ex()).unwrap().exp())
                    .sum();
                own / (n * all)
            })
            .collect();
        let total: f64 = zeta.iter().sum();
        for (w, z) in s.weighted.weights.iter().zip(&zeta) {
            assert!((w - z / total).abs() < 1e-12);
        }
        assert!((s.weighted.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for x in &s.resampled.current {
            assert!(a.particles.contains(x));
        }
    }

    #[test]
    fn mismatched_clouds_are_rejected() {
        let m = linear();
        let a = ParticleCloud::uniform(vec![Vector2::zeros(); 3]);
        let b = ParticleCloud::uniform(vec![Vector2::zeros(); 2]);
        assert!(smoothing_weights(&a, &b, &ex(), &m, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn zero_covariance_seeds_at_mean() {
        let m = linear();
        let belief = GaussianBelief::new(Vector2::new(2.0, 3.0), Matrix2::zeros());
        let cloud = seed_particles(&belief, 50, &m, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(cloud.particles.iter().all(|p| (p - Vector2::new(2.0, 3.0)).amax() < 1e-9));
        assert!(cloud.weights.iter().all(|w| *w == 1.0 / 50.0));
    }

    #[test]
    fn seed_mean_within_clt_band() {
        let m = linear();
        let belief = GaussianBelief::new(Vector2::new(1.0, -1.0), Matrix2::new(4.0, 1.0, 1.0, 2.0));
        let n = 100_000;
        let cloud = seed_particles(&belief, n, &m, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        let mean = cloud.summary().mean;
        for k in 0..2 {
            let band = 3.0 * belief.cov[(k, k)].sqrt() / (n as f64).sqrt();
            assert!((mean[k] - belief.mean[k]).abs() < band);
        }
    }

    #[test]
    fn pcrlb_step_deterministic_and_minimal_size() {
        let m = linear();
        let belief = GaussianBelief::new(Vector2::new(0.2, 0.1), Matrix2::identity() * 0.5);
        let prev = FisherState::from_prior(&belief.cov, FilterId::Ekf).unwrap();
        let a = pcrlb_step(&prev, &belief, 0.4, &ex(), &m, 300, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = pcrlb_step(&prev, &belief, 0.4, &ex(), &m, 300, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let tiny = pcrlb_step(&prev, &belief, 0.4, &ex(), &m, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(tiny.j.iter().chain(tiny.j_inv.iter()).all(|x| x.is_finite()));
    }
}
