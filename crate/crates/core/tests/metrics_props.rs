use proptest::prelude::*;
use vak_core::metrics::{
    brier_score, decile_occupancy, evaluate_degree, expected_calibration_error, log_loss, macro_f1,
};
use vak_core::PredictionRecord;

fn records(max_len: usize) -> impl Strategy<Value = Vec<PredictionRecord>> {
    prop::collection::vec((0.0..=1.0f64, 0u8..=1), 1..max_len).prop_map(|v| {
        v.into_iter()
            .map(|(p, y)| PredictionRecord::new(p, y).unwrap())
            .collect()
    })
}

fn rec(p: f64, y: u8) -> PredictionRecord {
    PredictionRecord::new(p, y).unwrap()
}

#[test]
fn hand_computed_fixture() {
    let r = [rec(0.2, 0), rec(0.2, 1), rec(0.7, 1), rec(0.9, 1)];
    let (ece, bins) = expected_calibration_error(&r, 10).unwrap();
    assert!((ece - 0.25).abs() < 1e-12);
    assert_eq!(
        bins.iter().map(|b| b.count).collect::<Vec<_>>(),
        [0, 2, 0, 0, 0, 0, 1, 0, 1, 0]
    );
    assert!((brier_score(&r).unwrap() - 0.195).abs() < 1e-12);
    let ll = -(0.8f64.ln() + 0.2f64.ln() + 0.7f64.ln() + 0.9f64.ln()) / 4.0;
    assert!((log_loss(&r).unwrap() - ll).abs() < 1e-12);
    assert!((macro_f1(&r, 0.5).unwrap() - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
}

#[test]
fn bin_edges_are_right_closed() {
    // 0.1 sits in the first bin, just above it in the second, 0 in the first
    let (_, bins) =
        expected_calibration_error(&[rec(0.1, 0), rec(0.0, 0), rec(0.1000001, 0)], 10).unwrap();
    assert_eq!(bins[0].count, 2);
    assert_eq!(bins[1].count, 1);
    let (_, bins) =
        expected_calibration_error(&[rec(1.0, 1), rec(0.3, 0), rec(0.7, 1)], 10).unwrap();
    assert_eq!(bins[9].count, 1);
    assert_eq!(bins[2].count, 1);
    assert_eq!(bins[6].count, 1);
}

#[test]
fn log_loss_is_clipped() {
    let ll = log_loss(&[rec(0.0, 1)]).unwrap();
    assert!((ll + 1e-15f64.ln()).abs() < 1e-9);
    assert!(log_loss(&[rec(1.0, 1)]).unwrap() < 1e-14);
}

#[test]
fn degenerate_degree_targets() {
    let same = [
        PredictionRecord::with_target(0.1, 0, 0.5).unwrap(),
        PredictionRecord::with_target(0.9, 1, 0.5).unwrap(),
    ];
    assert!(evaluate_degree(&same).is_err());
    assert!(evaluate_degree(&[rec(0.3, 1), rec(0.4, 0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bounded(r in records(200), bins in 1usize..30) {
        let (ece, b) = expected_calibration_error(&r, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&ece));
        prop_assert_eq!(b.iter().map(|x| x.count).sum::<usize>(), r.len());
        let brier = brier_score(&r).unwrap();
        prop_assert!((0.0..=1.0).contains(&brier));
        // -ln p >= 1 - p >= (1 - p)^2 for every record
        prop_assert!(log_loss(&r).unwrap() >= brier - 1e-12);
        let f1 = macro_f1(&r, 0.5).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!((1..=10).contains(&decile_occupancy(&r).unwrap()));
    }

    #[test]
    fn order_does_not_matter(r in records(100).prop_shuffle()) {
        let mut sorted = r.clone();
        sorted.sort_by(|a, b| a.probability.total_cmp(&b.probability).then(a.label.cmp(&b.label)));
        let tol = 1e-12;
        prop_assert!((expected_calibration_error(&r, 10).unwrap().0 - expected_calibration_error(&sorted, 10).unwrap().0).abs() <= tol);
        prop_assert!((log_loss(&r).unwrap() - log_loss(&sorted).unwrap()).abs() <= tol);
        prop_assert!((brier_score(&r).unwrap() - brier_score(&sorted).unwrap()).abs() <= tol);
        prop_assert_eq!(macro_f1(&r, 0.5).unwrap(), macro_f1(&sorted, 0.5).unwrap());
    }

    /// Groups whose probability equals their own positive rate are perfectly
    /// calibrated under any binning.
    #[test]
    fn self_consistent_groups_have_zero_ece(
        groups in prop::collection::vec((1usize..20).prop_flat_map(|n| (Just(n), 0..=n)), 1..15),
        bins in 1usize..25,
    ) {
        let r: Vec<PredictionRecord> = groups
            .iter()
            .flat_map(|&(n, k)| {
                let p = k as f64 / n as f64;
                (0..n).map(move |i| rec(p, u8::from(i < k)))
            })
            .collect();
        prop_assert!(expected_calibration_error(&r, bins).unwrap().0 <= 1e-12);
    }

    #[test]
    fn f1_symmetric_under_label_swap(v in prop::collection::vec((0u32..=1000, 0u8..=1), 1..100)) {
        let v: Vec<_> = v.into_iter().filter(|(k, _)| *k != 500).collect();
        prop_assume!(!v.is_empty());
        let r: Vec<_> = v.iter().map(|&(k, y)| rec(f64::from(k) / 1000.0, y)).collect();
        let s: Vec<_> = v.iter().map(|&(k, y)| rec(f64::from(1000 - k) / 1000.0, 1 - y)).collect();
        prop_assert!((macro_f1(&r, 0.5).unwrap() - macro_f1(&s, 0.5).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn perfect_degree_iff_zero_rmse(targets in prop::collection::vec(0.0..=1.0f64, 2..50), noise in prop::collection::vec(-0.2..0.2f64, 50)) {
        prop_assume!(targets.iter().any(|t| *t != targets[0]));
        let exact: Vec<_> = targets.iter().map(|&t| PredictionRecord::with_target(t, 1, t).unwrap()).collect();
        let (rmse, r2) = evaluate_degree(&exact).unwrap();
        prop_assert_eq!((rmse, r2), (0.0, 1.0));

        let noisy: Vec<_> = targets
            .iter()
            .zip(&noise)
            .map(|(&t, &e)| PredictionRecord::with_target((t + e).clamp(0.0, 1.0), 1, t).unwrap())
            .collect();
        let (rmse, r2) = evaluate_degree(&noisy).unwrap();
        prop_assert_eq!(rmse == 0.0, r2 == 1.0);
        prop_assert!(r2 <= 1.0);
    }
}
