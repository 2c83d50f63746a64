//! Weighted least-squares isotonic regression.
//!
//! The fit is a nondecreasing, right-continuous step function with one
//! breakpoint per distinct input score. Points sharing a score are pooled
//! before fitting so that the result is a function of the score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scored target with a positive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl ScoredPoint {
    pub fn new(x: f64, y: f64, w: f64) -> Self {
        ScoredPoint { x, y, w }
    }

    /// Unit-weight point.
    pub fn unit(x: f64, y: f64) -> Self {
        ScoredPoint { x, y, w: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite()) {
            return Err(Error::invalid(format!("non-finite point {self:?}")));
        }
        if self.w <= 0.0 {
            return Err(Error::invalid(format!(
                "weight must be positive, got {}",
                self.w
            )));
        }
        if !(0.0..=1.0).contains(&self.y) {
            return Err(Error::invalid(format!("target {} outside [0, 1]", self.y)));
        }
        Ok(())
    }
}

/// Nondecreasing piecewise-constant function.
///
/// `values[i]` holds on `[breakpoints[i], breakpoints[i + 1])`. Below the first
/// breakpoint the first value is used, at or above the last the last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the function at `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::invalid(format!(
                "cannot evaluate step function at {x}"
            )));
        }
        Ok(self.value_at(x))
    }

    pub(crate) fn value_at(&self, x: f64) -> f64 {
        // Number of breakpoints <= x.
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        self.values[idx.saturating_sub(1)]
    }
}

/// A run of pooled points kept as sums so block means are a single division.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub x: f64,
    pub sum_wy: f64,
    pub sum_w: f64,
}

fn validate_all(points: &[ScoredPoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    points.iter().try_for_each(ScoredPoint::validate)
}

/// Sorts by score and merges equal scores into weight sums.
pub(crate) fn pooled_blocks(points: &[ScoredPoint]) -> Vec<Block> {
    let mut sorted: Vec<ScoredPoint> = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));

    let mut blocks: Vec<Block> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match blocks.last_mut() {
            Some(last) if last.x == p.x => {
                last.sum_wy += p.w * p.y;
                last.sum_w += p.w;
            }
            _ => blocks.push(Block {
                x: p.x,
                sum_wy: p.w * p.y,
                sum_w: p.w,
            }),
        }
    }
    blocks
}

/// One point per distinct score: weighted-mean target and summed weight,
/// sorted by score.
pub fn pool_duplicates(points: &[ScoredPoint]) -> Result<Vec<ScoredPoint>> {
    validate_all(points)?;
    Ok(pooled_blocks(points)
        .into_iter()
        .map(|b| ScoredPoint::new(b.x, b.sum_wy / b.sum_w, b.sum_w))
        .collect())
}

/// Pool-adjacent-violators over blocks already sorted by strictly increasing x.
/// Returns one fitted value per input block.
pub(crate) fn pava(blocks: &[Block]) -> Vec<f64> {
    // (sum_wy, sum_w, number of input blocks merged)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut cur = (b.sum_wy, b.sum_w, 1usize);
        while let Some(&(sy, sw, n)) = stack.last() {
            // previous mean >= current mean -> violation (or tie), merge
            if sy * cur.1 >= cur.0 * sw {
                stack.pop();
                cur = (cur.0 + sy, cur.1 + sw, cur.2 + n);
            } else {
                break;
            }
        }
        stack.push(cur);
    }

    let mut fitted = Vec::with_capacity(blocks.len());
    for (sy, sw, n) in stack {
        let v = sy / sw;
        fitted.extend(std::iter::repeat_n(v, n));
    }
    fitted
}

/// Least-squares nondecreasing fit to `points`.
pub fn fit_isotonic(points: &[ScoredPoint]) -> Result<StepFunction> {
    validate_all(points)?;
    let blocks = pooled_blocks(points);
    let values = pava(&blocks);
    Ok(StepFunction {
        breakpoints: blocks.iter().map(|b| b.x).collect(),
        values,
    })
}
