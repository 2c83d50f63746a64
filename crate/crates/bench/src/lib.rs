//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vak_core::{LabeledScore, ScoredPoint};

/// Calibration set of `n` scores in (0, 1) with labels drawn from the score.
pub fn calibration_set(n: usize, seed: u64) -> Vec<LabeledScore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let s: f64 = rng.random();
            LabeledScore {
                score: s,
                label: u8::from(rng.random::<f64>() < s),
            }
        })
        .collect()
}

/// Test scores in (0, 1).
pub fn test_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n).map(|_| rng.random()).collect()
}

/// Noisy increasing trend with unit weights.
pub fn regression_points(n: usize, seed: u64) -> Vec<ScoredPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            ScoredPoint::unit(x, x + rng.random_range(-0.5..0.5))
        })
        .collect()
}
