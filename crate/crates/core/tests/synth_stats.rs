use vak_core::metrics::{expected_calibration_error, PredictionRecord};
use vak_core::synth::{generate, to_score_file};
use vak_core::{Distortion, Latent, SynthConfig};

fn config(n: usize, distortion: Distortion, latent: Latent) -> SynthConfig {
    SynthConfig {
        n,
        seed: 2024,
        distortion,
        latent,
    }
}

#[test]
fn labels_follow_latent_probability() {
    let samples = generate(&config(50_000, Distortion::Identity, Latent::Uniform)).unwrap();
    let mut sums = [(0.0f64, 0.0f64, 0usize); 10];
    for s in &samples {
        let d = ((s.true_probability * 10.0) as usize).min(9);
        sums[d].0 += s.true_probability;
        sums[d].1 += f64::from(s.score.label);
        sums[d].2 += 1;
    }
    for (d, (q, y, n)) in sums.iter().enumerate() {
        let n = *n as f64;
        assert!(
            ((q - y) / n).abs() <= 0.02,
            "decile {d}: mean q {} vs rate {}",
            q / n,
            y / n
        );
    }
}

#[test]
fn distortion_preserves_ranking() {
    for distortion in [
        Distortion::Overconfident(3.0),
        Distortion::Underconfident(0.4),
    ] {
        let mut samples = generate(&config(
            5_000,
            distortion,
            Latent::Bimodal {
                mix: 0.3,
                spread: 0.3,
            },
        ))
        .unwrap();
        samples.sort_by(|a, b| a.true_probability.total_cmp(&b.true_probability));
        assert!(samples
            .windows(2)
            .all(|w| w[0].score.score <= w[1].score.score));
    }
}

#[test]
fn overconfident_scores_are_miscalibrated() {
    let samples = generate(&config(
        20_000,
        Distortion::Overconfident(3.0),
        Latent::Uniform,
    ))
    .unwrap();
    let records: Vec<PredictionRecord> = samples
        .iter()
        .map(|s| PredictionRecord::new(s.score.score, s.score.label).unwrap())
        .collect();
    let (ece, _) = expected_calibration_error(&records, 10).unwrap();
    assert!(ece >= 0.05, "raw ece {ece}");
}

#[test]
fn bimodal_latent_has_two_bumps() {
    let samples = generate(&config(
        20_000,
        Distortion::Identity,
        Latent::Bimodal {
            mix: 0.7,
            spread: 0.3,
        },
    ))
    .unwrap();
    let upper = samples.iter().filter(|s| s.true_probability > 0.5).count() as f64 / 20_000.0;
    assert!((upper - 0.7).abs() < 0.03, "upper share {upper}");
    let middle = samples
        .iter()
        .filter(|s| (0.45..0.55).contains(&s.true_probability))
        .count();
    let near_low = samples
        .iter()
        .filter(|s| (0.15..0.25).contains(&s.true_probability))
        .count();
    assert!(near_low > middle);
}

#[test]
fn score_file_carries_truth() {
    let c = config(300, Distortion::Overconfident(2.0), Latent::Uniform);
    let samples = generate(&c).unwrap();
    let f = to_score_file(&samples, &c);
    assert_eq!(f.rows.len(), 300);
    for (row, s) in f.rows.iter().zip(&samples) {
        assert_eq!(row.score, s.score.score);
        assert_eq!(row.label, Some(s.score.label));
        assert_eq!(row.target, Some(s.true_probability));
    }
    for key in ["rng=chacha8", "seed=2024", "n=300", "overconfident:2"] {
        assert!(f.source.contains(key), "{key} missing from {}", f.source);
    }
}
