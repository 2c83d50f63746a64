//! Precomputation of every possible `(p0, p1)` answer.
//!
//! Work on the cumulative sum diagram (CSD) of the pooled calibration blocks:
//! `P_0 = (0, 0)`, `P_j = (W_j, S_j)` with `W_j` the cumulative weight and
//! `S_j` the cumulative label sum of the first `j` blocks. Adding a test point
//! with label 1 inserts a unit step of slope 1 into the diagram, and the
//! isotonic value at the test point is the slope of the greatest convex
//! minorant (GCM) over that step.
//!
//! A label-1 test point placed just before block `t` has the same fitted
//! value as one tied with block `t`: either PAVA merges the two, or the test
//! point's own block already sits at the maximum value 1. So the distinct
//! upper answers are indexed by the number of blocks strictly left of the
//! test step, `0..=m`. They are produced in one left-to-right sweep that
//! slides the test step past one calibration step at a time; each move changes
//! a single CSD corner, and the GCM to the right of the step is maintained on
//! a stack. Lower answers come from the same sweep on the mirrored problem
//! (order reversed, labels flipped).
//!
//! CSD coordinates are integers (unit weights, 0/1 labels), so every
//! orientation test is exact and each answer is a single division, which is
//! what the isotonic fit itself computes.

use crate::isotonic::Block;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pt {
    x: f64,
    y: f64,
}

impl Pt {
    fn add(self, o: Pt) -> Pt {
        Pt {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }

    fn sub(self, o: Pt) -> Pt {
        Pt {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

/// Twice the signed area of `o, a, b`; positive for a left turn.
fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Rise and run of the GCM segment covering the label-1 test step, for the
/// test step placed before block `t`, `t = 0..=m` (`t = m`: after all).
fn upper_segments(steps: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let m = steps.len();

    // corners[0] = P_0 - (1, 1); corners[u + 1] = P_u.
    let mut corners = Vec::with_capacity(m + 2);
    corners.push(Pt { x: -1.0, y: -1.0 });
    let mut acc = Pt { x: 0.0, y: 0.0 };
    corners.push(acc);
    for &(w, sy) in steps {
        acc = acc.add(Pt { x: w, y: sy });
        corners.push(acc);
    }

    // GCM of the whole diagram, built left to right ...
    let mut hull: Vec<Pt> = Vec::with_capacity(m + 2);
    for &p in &corners {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    // ... then stored right to left so the leftmost vertex is on top.
    hull.reverse();

    let mut out = Vec::with_capacity(m + 1);
    for t in 0..=m {
        let top = hull[hull.len() - 1];
        let next = hull[hull.len() - 2];
        out.push((next.y - top.y, next.x - top.x));
        if t == m {
            break;
        }

        // Swap the test step with calibration step t: the corner between
        // them moves, everything else stays.
        let moved = corners[t].add(corners[t + 2]).sub(corners[t + 1]);
        corners[t + 1] = moved;

        if cross(top, next, moved) >= 0.0 {
            continue;
        }
        hull.pop();
        while hull.len() >= 2 && cross(moved, hull[hull.len() - 1], hull[hull.len() - 2]) <= 0.0 {
            hull.pop();
        }
        hull.push(moved);
    }
    out
}

/// Lookup tables `(lower, upper)`, each of length `m + 1` for `m` blocks.
///
/// `upper[i]` is p1 for a test score with `i` distinct calibration scores
/// strictly below it; `lower[j]` is p0 for a test score with `j` distinct
/// calibration scores at or below it.
pub(super) fn precompute(blocks: &[Block]) -> (Vec<f64>, Vec<f64>) {
    let steps: Vec<(f64, f64)> = blocks.iter().map(|b| (b.sum_w, b.sum_wy)).collect();
    let upper = upper_segments(&steps)
        .into_iter()
        .map(|(rise, run)| rise / run)
        .collect();

    // Mirror: reverse order, flip labels. A label-1 point in the mirror is a
    // label-0 point in the original, and the fitted value flips to 1 - v.
    let mirrored: Vec<(f64, f64)> = steps.iter().rev().map(|&(w, sy)| (w, w - sy)).collect();
    let mirrored_upper = upper_segments(&mirrored);
    let m = steps.len();
    let lower = (0..=m)
        .map(|j| {
            let (rise, run) = mirrored_upper[m - j];
            (run - rise) / run
        })
        .collect();

    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(raw: &[(f64, f64)]) -> Vec<Block> {
        raw.iter()
            .enumerate()
            .map(|(i, &(w, sy))| Block {
                x: i as f64,
                sum_wy: sy,
                sum_w: w,
            })
            .collect()
    }

    #[test]
    fn single_block() {
        // one calibration point with label 1
        let (lower, upper) = precompute(&blocks(&[(1.0, 1.0)]));
        assert_eq!(upper, vec![1.0, 1.0]);
        // before the point: (z,0),(s,1) is monotone -> 0; tied: pooled -> 0.5
        assert_eq!(lower, vec![0.0, 0.5]);
    }

    #[test]
    fn descending_labels() {
        // labels 1 then 0: upper before step 1 (test between them) pools 1,1,0
        let (_, upper) = precompute(&blocks(&[(1.0, 1.0), (1.0, 0.0)]));
        assert!((upper[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((upper[1] - 2.0 / 3.0).abs() < 1e-15);
        // after both: 1, 0, 1 -> the test point stands alone at 1
        assert_eq!(upper[2], 1.0);
    }
}
