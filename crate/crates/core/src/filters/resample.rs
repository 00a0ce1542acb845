use rand::Rng;

use crate::error::{Error, Result};

/// Systematic resampling: one uniform offset, `n` evenly spaced positions
/// over the cumulative weights. Each count differs from `n·w_i` by less than one.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if weights.is_empty() || n == 0 {
        return Err(Error::Precondition("resampling needs at least one weight and one draw".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Precondition("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("weights sum to {total}, expected 1")));
    }

    let step = 1.0 / n as f64;
    let offset = rng.gen::<f64>() * step;
    let last = weights.len() - 1;
    let mut indices = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for j in 0..n {
        let position = offset + j as f64 * step;
        while position >= cumulative && i < last {
            i += 1;
            cumulative += weights[i];
        }
        indices.push(i);
    }
    Ok(indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn counts(idx: &[usize], k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &i in idx {
            c[i] += 1;
        }
        c
    }

    #[test]
    fn uniform_weights_pick_each_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = vec![0.125; 8];
        let idx = systematic_resample(&w, 8, &mut rng).unwrap();
        assert_eq!(counts(&idx, 8), vec![1; 8]);
    }

    #[test]
    fn three_quarter_weight_gives_exact_proportions() {
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = systematic_resample(&[0.75, 0.25], 4, &mut rng).unwrap();
            assert_eq!(counts(&idx, 2), vec![3, 1]);
        }
    }

    #[test]
    fn point_mass_copies_first_particle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut w = vec![0.0; 10];
        w[0] = 1.0;
        assert_eq!(systematic_resample(&w, 10, &mut rng).unwrap(), vec![0; 10]);
    }

    #[test]
    fn unnormalized_weights_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            systematic_resample(&[0.5, 0.6], 2, &mut rng),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn counts_within_one_of_expectation(raw in prop::collection::vec(0.0f64..1.0, 1..12), n in 1usize..200, seed: u64) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let idx = systematic_resample(&w, n, &mut rng).unwrap();
            prop_assert_eq!(idx.len(), n);
            for (i, c) in counts(&idx, w.len()).into_iter().enumerate() {
                prop_assert!((c as f64 - n as f64 * w[i]).abs() < 1.0 + 1e-9);
            }
        }
    }
}
