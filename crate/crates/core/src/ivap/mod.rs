//! Inductive Venn-ABERS prediction.
//!
//! A calibrator is fit once on a calibration set of labeled scores. For a test
//! score `z` it returns `p0`, the isotonic fit at `z` after adding `(z, 0)` to
//! the calibration set, and `p1`, the same with `(z, 1)`. [`predict_naive`]
//! does exactly that and is the reference semantics; [`IvapCalibrator::predict`]
//! answers the same question from precomputed tables in logarithmic time.

mod artifact;
mod fast;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isotonic::{self, Block};

pub use artifact::FORMAT_VERSION;

/// One calibration or test example: raw classifier score and binary label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub score: f64,
    pub label: u8,
}

impl LabeledScore {
    pub fn new(score: f64, label: u8) -> Result<Self> {
        let s = LabeledScore { score, label };
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !self.score.is_finite() {
            return Err(Error::invalid(format!("non-finite score {}", self.score)));
        }
        if self.label > 1 {
            return Err(Error::invalid(format!(
                "label must be 0 or 1, got {}",
                self.label
            )));
        }
        Ok(())
    }
}

/// Lower and upper probability of label 1, plus their log-loss merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiProbability {
    pub p0: f64,
    pub p1: f64,
    pub merged: f64,
}

impl MultiProbability {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        let merged = merge_probabilities(p0, p1)?;
        Ok(MultiProbability { p0, p1, merged })
    }

    /// Width of the interval `[p0, p1]`.
    pub fn spread(&self) -> f64 {
        self.p1 - self.p0
    }
}

/// Log-loss-regret-minimizing single probability `p1 / (1 - p0 + p1)`.
pub fn merge_probabilities(p0: f64, p1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
        return Err(Error::invalid(format!(
            "probabilities ({p0}, {p1}) outside [0, 1]"
        )));
    }
    if p0 > p1 {
        return Err(Error::InvalidMultiprobability { p0, p1 });
    }
    // (1 - p0) + p1 >= 1 under round-to-nearest, so the quotient never exceeds p1.
    let merged = p1 / (1.0 - p0 + p1);
    Ok(merged.max(p0))
}

/// Where a calibrator came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub source: String,
}

fn validate_calibration(calibration: &[LabeledScore]) -> Result<()> {
    if calibration.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    calibration.iter().try_for_each(LabeledScore::validate)
}

fn check_score(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite test score {z}")))
    }
}

/// Isotonic fit at `z` over the calibration set augmented with `(z, label)`.
fn augmented_fit(calibration: &[LabeledScore], z: f64, label: u8) -> f64 {
    let points: Vec<isotonic::ScoredPoint> = calibration
        .iter()
        .map(|c| isotonic::ScoredPoint::unit(c.score, f64::from(c.label)))
        .chain(std::iter::once(isotonic::ScoredPoint::unit(
            z,
            f64::from(label),
        )))
        .collect();
    let blocks = isotonic::pooled_blocks(&points);
    let fitted = isotonic::pava(&blocks);
    let idx = blocks
        .binary_search_by(|b| b.x.total_cmp(&z))
        .expect("test score is one of the augmented points");
    fitted[idx]
}

/// Reference IVAP semantics: two full isotonic fits per query, O(k log k).
pub fn predict_naive(calibration: &[LabeledScore], z: f64) -> Result<MultiProbability> {
    validate_calibration(calibration)?;
    check_score(z)?;
    let p0 = augmented_fit(calibration, z, 0);
    let p1 = augmented_fit(calibration, z, 1);
    MultiProbability::new(p0, p1)
}

/// Fitted inductive Venn-ABERS predictor.
///
/// Immutable after construction; `predict` takes `&self` and may be called
/// concurrently from any number of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IvapCalibrator {
    calibration: Vec<LabeledScore>,
    /// Distinct calibration scores, ascending.
    scores: Vec<f64>,
    /// `lower[j]`: p0 for test scores with exactly `j` distinct scores `<= z`.
    lower: Vec<f64>,
    /// `upper[i]`: p1 for test scores with exactly `i` distinct scores `< z`.
    upper: Vec<f64>,
    provenance: Provenance,
}

/// Fits a calibrator on `calibration`. Precomputation is O(k log k).
pub fn fit_ivap(calibration: &[LabeledScore]) -> Result<IvapCalibrator> {
    validate_calibration(calibration)?;

    let points: Vec<isotonic::ScoredPoint> = calibration
        .iter()
        .map(|c| isotonic::ScoredPoint::unit(c.score, f64::from(c.label)))
        .collect();
    let blocks: Vec<Block> = isotonic::pooled_blocks(&points);
    let scores = blocks.iter().map(|b| b.x).collect();
    let (lower, upper) = fast::precompute(&blocks);

    Ok(IvapCalibrator {
        calibration: calibration.to_vec(),
        scores,
        lower,
        upper,
        provenance: Provenance::default(),
    })
}

impl IvapCalibrator {
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Number of calibration examples `k`.
    pub fn calibration_size(&self) -> usize {
        self.calibration.len()
    }

    pub fn calibration(&self) -> &[LabeledScore] {
        &self.calibration
    }

    pub fn distinct_scores(&self) -> &[f64] {
        &self.scores
    }

    /// Multiprobability for test score `z` in O(log k).
    pub fn predict(&self, z: f64) -> Result<MultiProbability> {
        check_score(z)?;
        let below = self.scores.partition_point(|&s| s < z);
        let at_or_below = self.scores.partition_point(|&s| s <= z);
        let p0 = self.lower[at_or_below];
        let p1 = self.upper[below];
        if p0 > p1 {
            // cannot happen for exact label sums; never hand out an inverted pair
            return Err(Error::InvalidMultiprobability { p0, p1 });
        }
        MultiProbability::new(p0, p1)
    }

    /// Elementwise [`predict`](Self::predict), preserving order.
    pub fn predict_batch(&self, scores: &[f64]) -> Result<Vec<MultiProbability>> {
        if let Some((index, &value)) = scores.iter().enumerate().find(|(_, z)| !z.is_finite()) {
            return Err(Error::InvalidScore { index, value });
        }
        scores.iter().map(|&z| self.predict(z)).collect()
    }

    /// Same answer as [`predict`](Self::predict), recomputed from scratch.
    pub fn predict_naive(&self, z: f64) -> Result<MultiProbability> {
        predict_naive(&self.calibration, z)
    }
}
