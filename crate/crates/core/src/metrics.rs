//! Calibration and predictive-performance metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clipped to `[LOG_LOSS_EPS, 1 - LOG_LOSS_EPS]` before
/// taking logarithms.
pub const LOG_LOSS_EPS: f64 = 1e-15;

pub const DEFAULT_NUM_BINS: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// A predicted probability of label 1 with its observed label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub probability: f64,
    pub label: u8,
    /// Real-valued ground truth in `[0, 1]`, when the task has one.
    pub degree_target: Option<f64>,
}

impl PredictionRecord {
    pub fn new(probability: f64, label: u8) -> Result<Self> {
        let r = PredictionRecord {
            probability,
            label,
            degree_target: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn with_target(probability: f64, label: u8, target: f64) -> Result<Self> {
        let r = PredictionRecord {
            probability,
            label,
            degree_target: Some(target),
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::invalid(format!(
                "probability {} outside [0, 1]",
                self.probability
            )));
        }
        if self.label > 1 {
            return Err(Error::invalid(format!(
                "label must be 0 or 1, got {}",
                self.label
            )));
        }
        if let Some(t) = self.degree_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("degree target {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One equal-width confidence bin `(lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean predicted probability; `None` for an empty bin.
    pub mean_confidence: Option<f64>,
    /// Observed fraction of label 1; `None` for an empty bin.
    pub positive_fraction: Option<f64>,
}

fn check_records(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    records.iter().try_for_each(PredictionRecord::validate)
}

/// Index of the bin `(m/M, (m+1)/M]` holding `p`; 0 goes to the first bin.
pub(crate) fn bin_index(p: f64, num_bins: usize) -> usize {
    let m = num_bins as f64;
    let mut idx = ((p * m).ceil() as usize)
        .saturating_sub(1)
        .min(num_bins - 1);
    // (p * m).ceil() can be off by one next to a bin edge
    while idx > 0 && p <= idx as f64 / m {
        idx -= 1;
    }
    while idx + 1 < num_bins && p > (idx + 1) as f64 / m {
        idx += 1;
    }
    idx
}

/// ECE over `num_bins` equal-width bins, with the per-bin breakdown.
pub fn expected_calibration_error(
    records: &[PredictionRecord],
    num_bins: usize,
) -> Result<(f64, Vec<ReliabilityBin>)> {
    check_records(records)?;
    if num_bins == 0 {
        return Err(Error::invalid("number of bins must be at least 1"));
    }

    let mut counts = vec![0usize; num_bins];
    let mut conf = vec![0.0f64; num_bins];
    let mut positives = vec![0usize; num_bins];
    for r in records {
        let b = bin_index(r.probability, num_bins);
        counts[b] += 1;
        conf[b] += r.probability;
        positives[b] += usize::from(r.label);
    }

    let n = records.len() as f64;
    let m = num_bins as f64;
    let mut ece = 0.0;
    let bins = (0..num_bins)
        .map(|b| {
            let count = counts[b];
            let (mean_confidence, positive_fraction) = if count > 0 {
                let c = count as f64;
                let mc = conf[b] / c;
                let pf = positives[b] as f64 / c;
                ece += c * (pf - mc).abs();
                (Some(mc), Some(pf))
            } else {
                (None, None)
            };
            ReliabilityBin {
                lower: b as f64 / m,
                upper: (b + 1) as f64 / m,
                count,
                mean_confidence,
                positive_fraction,
            }
        })
        .collect();
    Ok((ece / n, bins))
}

/// Mean binary cross-entropy with clipped probabilities.
pub fn log_loss(records: &[PredictionRecord]) -> Result<f64> {
    check_records(records)?;
    let total: f64 = records
        .iter()
        .map(|r| {
            let p = r.probability.clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
            if r.label == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / records.len() as f64)
}

/// Mean squared difference between probability and label.
pub fn brier_score(records: &[PredictionRecord]) -> Result<f64> {
    check_records(records)?;
    let total: f64 = records
        .iter()
        .map(|r| (r.probability - f64::from(r.label)).powi(2))
        .sum();
    Ok(total / records.len() as f64)
}

/// F1 from confusion counts. A label never predicted and never present
/// scores 1; any other zero denominator scores 0.
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Macro-averaged F1 over labels {0, 1}; label 1 predicted iff
/// `probability > threshold`.
pub fn macro_f1(records: &[PredictionRecord], threshold: f64) -> Result<f64> {
    check_records(records)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    // confusion[predicted][actual]
    let mut confusion = [[0usize; 2]; 2];
    for r in records {
        let predicted = usize::from(r.probability > threshold);
        confusion[predicted][usize::from(r.label)] += 1;
    }
    let f1_pos = f1(confusion[1][1], confusion[1][0], confusion[0][1]);
    let f1_neg = f1(confusion[0][0], confusion[0][1], confusion[1][0]);
    Ok((f1_pos + f1_neg) / 2.0)
}

/// RMSE and R² of probabilities against real-valued degree targets.
pub fn evaluate_degree(records: &[PredictionRecord]) -> Result<(f64, f64)> {
    check_records(records)?;
    let targets: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.degree_target.ok_or(Error::MissingTarget(i)))
        .collect::<Result<_>>()?;
    if records.len() < 2 {
        return Err(Error::invalid(
            "degree evaluation needs at least two records",
        ));
    }

    let n = records.len() as f64;
    let mean_t = targets.iter().sum::<f64>() / n;
    let sse: f64 = records
        .iter()
        .zip(&targets)
        .map(|(r, t)| (r.probability - t).powi(2))
        .sum();
    let sst: f64 = targets.iter().map(|t| (t - mean_t).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateTargets);
    }
    Ok(((sse / n).sqrt(), 1.0 - sse / sst))
}

/// Number of the ten equal-width probability bins holding at least 1% of
/// the records.
pub fn decile_occupancy(records: &[PredictionRecord]) -> Result<usize> {
    check_records(records)?;
    let mut counts = [0usize; 10];
    for r in records {
        counts[bin_index(r.probability, 10)] += 1;
    }
    let n = records.len();
    Ok(counts.iter().filter(|&&c| c * 100 >= n).count())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub num_bins: usize,
    pub threshold: f64,
    /// Also compute RMSE/R² against degree targets.
    pub degree: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            num_bins: DEFAULT_NUM_BINS,
            threshold: DEFAULT_THRESHOLD,
            degree: false,
        }
    }
}

/// Every metric for one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub num_bins: usize,
    pub threshold: f64,
    pub ece: f64,
    pub log_loss: f64,
    pub brier: f64,
    pub macro_f1: f64,
    pub decile_occupancy: usize,
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
    pub bins: Vec<ReliabilityBin>,
}

pub fn evaluate(records: &[PredictionRecord], options: &EvalOptions) -> Result<MetricsReport> {
    let (ece, bins) = expected_calibration_error(records, options.num_bins)?;
    let (rmse, r2) = if options.degree {
        let (rmse, r2) = evaluate_degree(records)?;
        (Some(rmse), Some(r2))
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        n: records.len(),
        num_bins: options.num_bins,
        threshold: options.threshold,
        ece,
        log_loss: log_loss(records)?,
        brier: brier_score(records)?,
        macro_f1: macro_f1(records, options.threshold)?,
        decile_occupancy: decile_occupancy(records)?,
        rmse,
        r2,
        bins,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl MetricsReport {
    /// One `key=value` line per metric, then one `bin=` row per bin:
    /// `lower,upper,count,mean_confidence,positive_fraction` (empty fields for
    /// empty bins).
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "num_bins={}", self.num_bins);
        let _ = writeln!(out, "threshold={:?}", self.threshold);
        let _ = writeln!(out, "ece={:?}", self.ece);
        let _ = writeln!(out, "ece_percent={:.2}", self.ece * 100.0);
        let _ = writeln!(out, "log_loss={:?}", self.log_loss);
        let _ = writeln!(out, "brier={:?}", self.brier);
        let _ = writeln!(out, "macro_f1={:?}", self.macro_f1);
        let _ = writeln!(out, "decile_occupancy={}", self.decile_occupancy);
        if let Some(rmse) = self.rmse {
            let _ = writeln!(out, "rmse={rmse:?}");
        }
        if let Some(r2) = self.r2 {
            let _ = writeln!(out, "r2={r2:?}");
        }
        for b in &self.bins {
            let _ = writeln!(
                out,
                "bin={:?},{:?},{},{},{}",
                b.lower,
                b.upper,
                b.count,
                opt(b.mean_confidence),
                opt(b.positive_fraction)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(raw: &[(f64, u8)]) -> Vec<PredictionRecord> {
        raw.iter()
            .map(|&(p, y)| PredictionRecord::new(p, y).unwrap())
            .collect()
    }

    #[test]
    fn ece_fixtures() {
        let (ece, _) = expected_calibration_error(&recs(&[(0.5, 0), (0.5, 1)]), 10).unwrap();
        assert_eq!(ece, 0.0);

        let (ece, bins) =
            expected_calibration_error(&recs(&[(0.1, 0), (0.1, 0), (0.9, 1), (0.9, 1)]), 10)
                .unwrap();
        assert!((ece - 0.1).abs() < 1e-12);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[8].count, 2);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 4);
        assert_eq!(bins[5].mean_confidence, None);

        let (ece, _) = expected_calibration_error(&recs(&[(1.0, 1), (1.0, 1)]), 10).unwrap();
        assert_eq!(ece, 0.0);
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.100000001, 10), 1);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.7, 10), 6);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.42, 1), 0);
        for i in 1..=10 {
            let edge = i as f64 / 10.0;
            assert_eq!(bin_index(edge, 10), i - 1, "edge {edge}");
        }
    }

    #[test]
    fn log_loss_cases() {
        assert!(log_loss(&recs(&[(1.0, 1)])).unwrap() < 1e-14);
        assert!((log_loss(&recs(&[(0.5, 1)])).unwrap() - 2f64.ln()).abs() < 1e-12);
        let clipped = log_loss(&recs(&[(0.0, 1)])).unwrap();
        assert!((clipped - (-(1e-15f64).ln())).abs() < 1e-9);
        assert!((clipped - 34.538776394910684).abs() < 1e-9);
    }

    #[test]
    fn brier_cases() {
        assert_eq!(brier_score(&recs(&[(1.0, 1)])).unwrap(), 0.0);
        assert!((brier_score(&recs(&[(0.8, 1)])).unwrap() - 0.04).abs() < 1e-12);
        assert_eq!(brier_score(&recs(&[(0.5, 0), (0.5, 1)])).unwrap(), 0.25);
    }

    #[test]
    fn f1_cases() {
        assert_eq!(macro_f1(&recs(&[(0.9, 1), (0.1, 0)]), 0.5).unwrap(), 1.0);
        let mixed = macro_f1(&recs(&[(0.9, 1), (0.9, 0), (0.1, 0)]), 0.5).unwrap();
        assert!((mixed - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(macro_f1(&recs(&[(0.1, 1), (0.9, 0)]), 0.5).unwrap(), 0.0);
        // only negatives, all predicted negative: label 1 absent everywhere
        assert_eq!(macro_f1(&recs(&[(0.1, 0), (0.2, 0)]), 0.5).unwrap(), 1.0);
        // probability exactly at the threshold predicts 0
        assert_eq!(macro_f1(&recs(&[(0.5, 0)]), 0.5).unwrap(), 1.0);
        assert!(macro_f1(&recs(&[(0.5, 0)]), 1.0).is_err());
    }

    #[test]
    fn degree_cases() {
        let exact: Vec<_> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&t| PredictionRecord::with_target(t, 0, t).unwrap())
            .collect();
        assert_eq!(evaluate_degree(&exact).unwrap(), (0.0, 1.0));

        let mean: Vec<_> = [0.2, 0.4, 0.9]
            .iter()
            .map(|&t| PredictionRecord::with_target(0.5, 0, t).unwrap())
            .collect();
        assert!(evaluate_degree(&mean).unwrap().1.abs() < 1e-12);

        let flipped = vec![
            PredictionRecord::with_target(0.0, 0, 1.0).unwrap(),
            PredictionRecord::with_target(1.0, 1, 0.0).unwrap(),
        ];
        let (rmse, r2) = evaluate_degree(&flipped).unwrap();
        assert!((rmse - 1.0).abs() < 1e-12);
        assert!((r2 + 3.0).abs() < 1e-12);

        let missing = recs(&[(0.3, 0), (0.4, 1)]);
        assert!(matches!(
            evaluate_degree(&missing),
            Err(Error::MissingTarget(0))
        ));
        let flat = vec![
            PredictionRecord::with_target(0.1, 0, 0.5).unwrap(),
            PredictionRecord::with_target(0.9, 1, 0.5).unwrap(),
        ];
        assert!(matches!(
            evaluate_degree(&flat),
            Err(Error::DegenerateTargets)
        ));
    }

    #[test]
    fn occupancy() {
        assert_eq!(decile_occupancy(&recs(&[(0.95, 1); 20])).unwrap(), 1);
        let grid: Vec<_> = (0..10).map(|i| (0.05 + 0.1 * i as f64, 0)).collect();
        assert_eq!(decile_occupancy(&recs(&grid)).unwrap(), 10);
        let mut two = vec![(0.05, 0); 50];
        two.extend(vec![(0.95, 1); 50]);
        assert_eq!(decile_occupancy(&recs(&two)).unwrap(), 2);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            expected_calibration_error(&[], 10),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(log_loss(&[]), Err(Error::EmptyInput)));
        assert!(matches!(brier_score(&[]), Err(Error::EmptyInput)));
        assert!(matches!(macro_f1(&[], 0.5), Err(Error::EmptyInput)));
        assert!(matches!(decile_occupancy(&[]), Err(Error::EmptyInput)));
        assert!(matches!(evaluate_degree(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn report_formats() {
        let r = evaluate(
            &recs(&[(0.1, 0), (0.1, 0), (0.9, 1), (0.9, 1)]),
            &EvalOptions::default(),
        )
        .unwrap();
        let kv = r.to_key_value();
        let ece: f64 = kv
            .lines()
            .find_map(|l| l.strip_prefix("ece="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((ece - 0.1).abs() < 1e-12);
        assert!(kv.contains("ece_percent=10.00"));
        assert_eq!(kv.lines().filter(|l| l.starts_with("bin=")).count(), 10);
        assert!(kv.contains("bin=0.0,0.1,2,0.1,0.0\n"));
        assert!(kv.contains("bin=0.5,0.6,0,,\n"));
        let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
