//! Inductive Venn-ABERS calibration for binary classifiers.
//!
//! The crate turns raw classifier scores into multiprobability predictions
//! `(p0, p1)` using isotonic regression over a held-out calibration set, and
//! ships the metrics needed to judge the result: expected calibration error,
//! log loss, Brier score, macro-F1 and degree-estimation RMSE/R².
//!
//! ```
//! use vak_core::{fit_ivap, LabeledScore};
//!
//! let calibration = vec![
//!     LabeledScore::new(0.1, 0).unwrap(),
//!     LabeledScore::new(0.4, 0).unwrap(),
//!     LabeledScore::new(0.6, 1).unwrap(),
//!     LabeledScore::new(0.9, 1).unwrap(),
//! ];
//! let calibrator = fit_ivap(&calibration).unwrap();
//! let mp = calibrator.predict(0.95).unwrap();
//! assert!((mp.p0 - 2.0 / 3.0).abs() < 1e-12);
//! assert_eq!(mp.p1, 1.0);
//! assert!((mp.merged - 0.75).abs() < 1e-12);
//! ```

pub mod chart;
pub mod dataio;
mod error;
pub mod isotonic;
pub mod ivap;
pub mod metrics;
pub mod split;
pub mod synth;

pub use chart::{build_bubbles, render_chart, Bubble, ChartFormat};
pub use error::{Error, Result};
pub use isotonic::{fit_isotonic, pool_duplicates, ScoredPoint, StepFunction};
pub use ivap::{
    fit_ivap, merge_probabilities, predict_naive, IvapCalibrator, LabeledScore, MultiProbability,
    Provenance,
};
pub use metrics::{MetricsReport, PredictionRecord, ReliabilityBin};
pub use split::{split_training, Split, DEFAULT_PROPER_FRACTION};
pub use synth::{Distortion, Latent, SynthConfig, SynthSample};
