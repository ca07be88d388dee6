//! Seeded, counter-based randomness for competitor construction and the
//! verification suites. The same (seed, stream) pair always yields the same
//! draws, independent of call order.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::estimation::DistributionEstimator;
use crate::measure::{Distribution, IIDSpace, SampleSpace};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A stable sub-seed for the `index`-th member of a seeded batch.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut state)
}

/// A ChaCha generator keyed by (seed, stream); distinct streams under one
/// seed are independent for practical purposes.
pub fn keyed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// A random full-support distribution with logits uniform on [-2, 2).
pub fn random_distribution(space: &Arc<SampleSpace>, rng: &mut impl Rng) -> Distribution {
    let logits: Vec<f64> = (0..space.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
    Distribution::from_logits(space.clone(), logits).expect("finite logits normalize")
}

/// A random estimator assigning an independent full-support distribution on
/// `target` to every outcome of `domain`.
pub fn random_estimator(
    domain: &IIDSpace,
    target: &Arc<SampleSpace>,
    rng: &mut impl Rng,
) -> DistributionEstimator {
    DistributionEstimator::from_fn(domain.clone(), |_| {
        Arc::new(random_distribution(target, rng))
    })
    .expect("freshly drawn values share the target space")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_rng_reproduces() {
        let mut a = keyed_rng(7, 3);
        let mut b = keyed_rng(7, 3);
        let xs: Vec<f64> = (0..8).map(|_| a.random_range(0.0..1.0)).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.random_range(0.0..1.0)).collect();
        assert_eq!(xs, ys);
        let mut c = keyed_rng(7, 4);
        let zs: Vec<f64> = (0..8).map(|_| c.random_range(0.0..1.0)).collect();
        assert_ne!(xs, zs);
    }

    #[test]
    fn random_distribution_is_normalized_full_support() {
        let space = SampleSpace::integers(10);
        let mut rng = keyed_rng(1, 0);
        let d = random_distribution(&space, &mut rng);
        assert!(d.is_full_support());
        let sum: f64 = d.masses().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
