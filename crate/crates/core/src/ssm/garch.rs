use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// GARCH(1,1) weights `v' = ω + α·u² + β·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let all_ok = [omega, alpha, beta].iter().all(|x| x.is_finite() && *x >= 0.0);
        if !all_ok {
            return Err(Error::InvalidInput(format!(
                "GARCH weights must be finite and non-negative (ω={omega}, α={alpha}, β={beta})"
            )));
        }
        if alpha + beta >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "GARCH requires α + β < 1, got {}",
                alpha + beta
            )));
        }
        Ok(Self { omega, alpha, beta })
    }

    /// Unconditional variance `ω / (1 − α − β)`.
    pub fn long_run_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// Gaussian log-likelihood of `returns` with the conditional variance seeded at `v0`.
pub fn garch_log_likelihood(params: &GarchParams, returns: &[f64], v0: f64) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut h = v0;
    let mut ll = 0.0;
    for &u in returns {
        if h <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll -= 0.5 * (ln_2pi + h.ln() + u * u / h);
        h = params.omega + params.alpha * u * u + params.beta * h;
    }
    ll
}

/// Variance-targeting maximum likelihood: `ω` is tied to the sample variance
/// and `(α, β)` are found by a refining grid search over the stationary region.
pub fn calibrate_variance_targeting(returns: &[f64], demean: bool) -> Result<GarchParams> {
    if returns.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "GARCH calibration needs at least 10 returns, got {}",
            returns.len()
        )));
    }
    if returns.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidInput("non-finite return in calibration input".into()));
    }
    let mean = if demean {
        returns.iter().sum::<f64>() / returns.len() as f64
    } else {
        0.0
    };
    let centred: Vec<f64> = returns.iter().map(|u| u - mean).collect();
    let target = centred.iter().map(|u| u * u).sum::<f64>() / centred.len() as f64;
    if target <= 0.0 {
        return Err(Error::InvalidInput("returns have zero variance".into()));
    }

    let objective = |alpha: f64, beta: f64| -> f64 {
        if alpha < 0.0 || beta < 0.0 || alpha + beta >= 0.999 {
            return f64::NEG_INFINITY;
        }
        let p = GarchParams { omega: target * (1.0 - alpha - beta), alpha, beta };
        garch_log_likelihood(&p, &centred, target)
    };

    let (mut best_a, mut best_b, mut best_ll) = (0.05, 0.9, objective(0.05, 0.9));
    let mut step = 0.05;
    let (mut lo_a, mut hi_a, mut lo_b, mut hi_b) = (0.0, 1.0, 0.0, 1.0);
    for _ in 0..8 {
        let mut a = lo_a;
        while a <= hi_a + 1e-12 {
            let mut b = lo_b;
            while b <= hi_b + 1e-12 {
                let ll = objective(a, b);
                if ll > best_ll {
                    (best_a, best_b, best_ll) = (a, b, ll);
                }
                b += step;
            }
            a += step;
        }
        lo_a = (best_a - step).max(0.0);
        hi_a = best_a + step;
        lo_b = (best_b - step).max(0.0);
        hi_b = best_b + step;
        step /= 4.0;
    }
    GarchParams::new(target * (1.0 - best_a - best_b), best_a, best_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rejects_non_stationary() {
        assert!(GarchParams::new(1e-6, 0.5, 0.5).is_err());
        assert!(GarchParams::new(-1e-6, 0.1, 0.5).is_err());
    }

    #[test]
    fn long_run_variance_is_fixed_point() {
        let p = GarchParams::new(2e-6, 0.08, 0.9).unwrap();
        let lr = p.long_run_variance();
        assert!((p.omega + (p.alpha + p.beta) * lr - lr).abs() < 1e-18);
    }

    #[test]
    fn recovers_simulated_parameters() {
        let truth = GarchParams::new(2e-6, 0.1, 0.85).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut h = truth.long_run_variance();
        let returns: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let u = h.sqrt() * z;
                h = truth.omega + truth.alpha * u * u + truth.beta * h;
                u
            })
            .collect();
        let fit = calibrate_variance_targeting(&returns, false).unwrap();
        assert!((fit.alpha - 0.1).abs() < 0.03, "{fit:?}");
        assert!((fit.beta - 0.85).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn short_series_is_insufficient() {
        assert!(matches!(
            calibrate_variance_targeting(&[0.01; 5], false),
            Err(Error::InsufficientData(_))
        ));
    }
}
