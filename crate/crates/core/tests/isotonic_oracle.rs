//! PAVA against exhaustive search over contiguous partitions.

use proptest::prelude::*;
use vak_core::{fit_isotonic, pool_duplicates, ScoredPoint};

/// Ties pooled into (x, weighted mean, weight), sorted by x.
fn pooled(points: &[ScoredPoint]) -> Vec<(f64, f64, f64)> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for p in sorted {
        match out.last_mut() {
            Some(last) if last.0 == p.x => {
                last.1 += p.w * p.y;
                last.2 += p.w;
            }
            _ => out.push((p.x, p.w * p.y, p.w)),
        }
    }
    out.into_iter().map(|(x, s, w)| (x, s / w, w)).collect()
}

/// Best monotone fit at each distinct x by trying every contiguous partition.
fn brute_force(points: &[ScoredPoint]) -> Vec<(f64, f64)> {
    let g = pooled(points);
    let k = g.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (k - 1)) {
        let mut fitted = Vec::with_capacity(k);
        let mut start = 0;
        for end in 0..k {
            if end == k - 1 || mask & (1 << end) != 0 {
                let (sy, sw) = g[start..=end]
                    .iter()
                    .fold((0.0, 0.0), |(sy, sw), &(_, y, w)| (sy + y * w, sw + w));
                fitted.extend(std::iter::repeat_n(sy / sw, end - start + 1));
                start = end + 1;
            }
        }
        if fitted.windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        let sse: f64 = g
            .iter()
            .zip(&fitted)
            .map(|(&(_, y, w), f)| w * (y - f).powi(2))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fitted));
        }
    }
    let fitted = best
        .expect("the single-block partition is always monotone")
        .1;
    g.iter().map(|p| p.0).zip(fitted).collect()
}

fn sse(points: &[ScoredPoint], f: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|p| p.w * (p.y - f(p.x)).powi(2)).sum()
}

fn points(max_len: usize) -> impl Strategy<Value = Vec<ScoredPoint>> {
    // few distinct x values so ties are common
    prop::collection::vec(
        (
            0u8..10,
            prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64],
            0.1..5.0f64,
        ),
        1..max_len,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(x, y, w)| ScoredPoint::new(f64::from(x) / 4.0, y, w))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_exhaustive_search(pts in points(24)) {
        let fit = fit_isotonic(&pts).unwrap();
        for (x, want) in brute_force(&pts) {
            let got = fit.evaluate(x).unwrap();
            prop_assert!((got - want).abs() <= 1e-9, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn monotone_and_no_worse_than_constant(pts in points(40), probe in prop::collection::vec(-1.0..4.0f64, 20)) {
        let fit = fit_isotonic(&pts).unwrap();
        prop_assert!(fit.values().windows(2).all(|w| w[0] <= w[1]));
        let mut probe = probe;
        probe.sort_by(f64::total_cmp);
        let vals: Vec<f64> = probe.iter().map(|&x| fit.evaluate(x).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));

        let total_w: f64 = pts.iter().map(|p| p.w).sum();
        let mean = pts.iter().map(|p| p.w * p.y).sum::<f64>() / total_w;
        prop_assert!(sse(&pts, |x| fit.evaluate(x).unwrap()) <= sse(&pts, |_| mean) + 1e-9);
        // weighted mean is preserved
        let fitted_mean = pts.iter().map(|p| p.w * fit.evaluate(p.x).unwrap()).sum::<f64>() / total_w;
        prop_assert!((fitted_mean - mean).abs() <= 1e-9);
    }

    #[test]
    fn idempotent(pts in points(40)) {
        let fit = fit_isotonic(&pts).unwrap();
        let refit_input: Vec<ScoredPoint> = pts
            .iter()
            .map(|p| ScoredPoint::new(p.x, fit.evaluate(p.x).unwrap(), p.w))
            .collect();
        let refit = fit_isotonic(&refit_input).unwrap();
        for p in &pts {
            prop_assert!((refit.evaluate(p.x).unwrap() - fit.evaluate(p.x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn order_of_input_is_irrelevant(pts in points(30).prop_shuffle()) {
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let (a, b) = (fit_isotonic(&pts).unwrap(), fit_isotonic(&sorted).unwrap());
        for p in &pts {
            prop_assert!((a.evaluate(p.x).unwrap() - b.evaluate(p.x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn pooling_keeps_one_point_per_x(pts in points(30)) {
        let pooled_pts = pool_duplicates(&pts).unwrap();
        prop_assert!(pooled_pts.windows(2).all(|w| w[0].x < w[1].x));
        let want = pooled(&pts);
        prop_assert_eq!(pooled_pts.len(), want.len());
        for (p, (x, y, w)) in pooled_pts.iter().zip(want) {
            prop_assert_eq!(p.x, x);
            prop_assert!((p.y - y).abs() <= 1e-12 && (p.w - w).abs() <= 1e-9);
        }
    }
}

#[test]
fn rejects_bad_points() {
    assert!(fit_isotonic(&[]).is_err());
    assert!(fit_isotonic(&[ScoredPoint::new(f64::NAN, 0.5, 1.0)]).is_err());
    assert!(fit_isotonic(&[ScoredPoint::new(0.0, 0.5, 0.0)]).is_err());
    assert!(fit_isotonic(&[ScoredPoint::new(0.0, 1.5, 1.0)]).is_err());
}
