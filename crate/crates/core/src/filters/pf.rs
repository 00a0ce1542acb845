use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{systematic_resample, GaussianBelief, FALLBACK_INFLATION};
use crate::error::{Error, Result};
use crate::linalg::psd_factor;
use crate::ssm::{ExogenousInputs, StateSpaceModel};

/// Weighted particle approximation of a filtering distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    pub particles: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
}

impl ParticleCloud {
    pub fn uniform(particles: Vec<Vector2<f64>>) -> Self {
        let w = 1.0 / particles.len() as f64;
        let weights = vec![w; particles.len()];
        Self { particles, weights }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weighted mean and covariance.
    pub fn summary(&self) -> GaussianBelief {
        let mut mean = Vector2::zeros();
        for (x, w) in self.particles.iter().zip(&self.weights) {
            mean += *w * x;
        }
        let mut cov = Matrix2::zeros();
        for (x, w) in self.particles.iter().zip(&self.weights) {
            let d = x - mean;
            cov += *w * d * d.transpose();
        }
        GaussianBelief::new(mean, cov)
    }
}

/// Normalizes log-weights in place into probabilities. Returns `false` when
/// no weight is finite.
pub(crate) fn normalize_log_weights(log_w: &[f64], out: &mut Vec<f64>) -> bool {
    let max = log_w.iter().copied().filter(|x| !x.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    if !max.is_finite() {
        return false;
    }
    out.extend(log_w.iter().map(|&l| if l.is_nan() { 0.0 } else { (l - max).exp() }));
    let total: f64 = out.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return false;
    }
    out.iter_mut().for_each(|w| *w /= total);
    true
}

/// Propagates every particle through the transition with sampled process
/// noise and reweights by the likelihood of `obs`. The returned flag is set
/// when every likelihood vanished and the weights were reset to uniform.
pub(crate) fn propagate_and_weight<M: StateSpaceModel + ?Sized, R: Rng + ?Sized>(
    prior: &ParticleCloud,
    obs: f64,
    ex: &ExogenousInputs,
    model: &M,
    rng: &mut R,
) -> Result<(ParticleCloud, bool)> {
    let n = prior.len();
    if n < 2 {
        return Err(Error::Precondition(format!("particle filter needs N >= 2, got {n}")));
    }
    if !obs.is_finite() {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let noise = psd_factor(&model.process_noise())?;
    let r = model.measurement_noise();

    let mut particles = Vec::with_capacity(n);
    let mut log_w = Vec::with_capacity(n);
    for (x, w) in prior.particles.iter().zip(&prior.weights) {
        let xi = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let next = model.project(model.transition_mean(x, ex) + noise * xi);
        let ll = match model.measure(&next, ex) {
            Ok(y) => -0.5 * (obs - y).powi(2) / r,
            Err(_) => f64::NEG_INFINITY,
        };
        particles.push(next);
        log_w.push(ll + w.ln());
    }

    let mut weights = Vec::with_capacity(n);
    let recovered = !normalize_log_weights(&log_w, &mut weights);
    if recovered {
        log::warn!("particle weights degenerate; resetting to uniform");
        weights = vec![1.0 / n as f64; n];
    }
    Ok((ParticleCloud { particles, weights }, recovered))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfUpdate {
    pub cloud: ParticleCloud,
    /// Weighted mean and covariance before resampling.
    pub summary: GaussianBelief,
    /// All likelihoods vanished and the weights were reset to uniform.
    pub recovered: bool,
}

/// Bootstrap particle filter step: propagate through the transition with
/// sampled process noise, weight by the measurement likelihood, summarize,
/// then resample systematically (every step unless an ESS threshold is set).
pub fn pf_update<M: StateSpaceModel + ?Sized, R: Rng + ?Sized>(
    prior: &ParticleCloud,
    obs: f64,
    ex: &ExogenousInputs,
    model: &M,
    ess_threshold: Option<f64>,
    rng: &mut R,
) -> Result<PfUpdate> {
    let n = prior.len();
    let (weighted, recovered) = propagate_and_weight(prior, obs, ex, model, rng)?;
    let mut summary = weighted.summary();
    if recovered {
        summary = summary.inflated(FALLBACK_INFLATION);
    }

    let resample = match ess_threshold {
        None => true,
        Some(frac) => weighted.effective_sample_size() < frac * n as f64,
    };
    let cloud = if resample {
        let idx = systematic_resample(&weighted.weights, n, rng)?;
        ParticleCloud::uniform(idx.into_iter().map(|i| weighted.particles[i]).collect())
    } else {
        weighted
    };
    Ok(PfUpdate { cloud, summary, recovered })
}
