//! Seeded proper-training / calibration split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Proper-training share of the training data: a 75:15 proper:calibration
/// ratio, i.e. 5/6.
pub const DEFAULT_PROPER_FRACTION: f64 = 75.0 / 90.0;

/// Name of the generator behind every seeded operation in the crate.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub proper: Vec<T>,
    pub calibration: Vec<T>,
    pub seed: u64,
    pub rng: &'static str,
}

/// Shuffles `examples` with a generator seeded by `seed` and cuts at
/// `round(n * proper_fraction)`.
pub fn split_training<T>(
    mut examples: Vec<T>,
    proper_fraction: f64,
    seed: u64,
) -> Result<Split<T>> {
    if !(proper_fraction > 0.0 && proper_fraction < 1.0) {
        return Err(Error::InvalidFraction(proper_fraction));
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    examples.shuffle(&mut rng);

    let cut = (examples.len() as f64 * proper_fraction).round() as usize;
    let calibration = examples.split_off(cut.min(examples.len()));
    Ok(Split {
        proper: examples,
        calibration,
        seed,
        rng: RNG_NAME,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ratio_sizes() {
        let s = split_training((0..120).collect::<Vec<_>>(), DEFAULT_PROPER_FRACTION, 7).unwrap();
        assert_eq!((s.proper.len(), s.calibration.len()), (100, 20));
        let mut all: Vec<i32> = s.proper.iter().chain(&s.calibration).copied().collect();
        all.sort();
        assert_eq!(all, (0..120).collect::<Vec<_>>());
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = split_training((0..10).collect::<Vec<_>>(), 0.5, 3).unwrap();
        let b = split_training((0..10).collect::<Vec<_>>(), 0.5, 3).unwrap();
        assert_eq!(a, b);
        let c = split_training((0..10).collect::<Vec<_>>(), 0.5, 4).unwrap();
        assert_ne!(a.proper, c.proper);
    }

    #[test]
    fn fraction_bounds() {
        for f in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(
                split_training(vec![1, 2, 3], f, 0),
                Err(Error::InvalidFraction(_))
            ));
        }
        assert!(matches!(
            split_training(Vec::<u8>::new(), 0.5, 0),
            Err(Error::EmptyInput)
        ));
    }
}
