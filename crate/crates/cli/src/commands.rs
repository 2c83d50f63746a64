use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::Serialize;
use serde_json::json;
use vak_core::chart::{build_bubbles, render_chart, ChartFormat};
use vak_core::dataio::{
    read_probabilities, read_scores, render_predictions, write_atomic, write_scores, FileFormat,
    PredictionRow, ProbabilityRow, ScoreFile,
};
use vak_core::metrics::{evaluate, EvalOptions, MetricsReport};
use vak_core::split::RNG_NAME;
use vak_core::synth::{generate, to_score_file};
use vak_core::{
    fit_ivap, split_training, IvapCalibrator, PredictionRecord, Provenance, SynthConfig,
};

use crate::manifest::{unix_ms, RunManifest};
use crate::{
    CalibrateArgs, ChartArgs, Cli, Command, CompareArgs, EvaluateArgs, PredictArgs, ReplayArgs,
    SplitArgs, SynthArgs,
};

struct Run {
    command: &'static str,
    argv: Vec<String>,
    started: u128,
}

impl Run {
    fn finish(
        self,
        inputs: &[&Path],
        outputs: &[&Path],
        seed: Option<u64>,
        params: serde_json::Value,
    ) -> Result<()> {
        let manifest = RunManifest {
            tool: "vak".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            argv: self.argv,
            cwd: std::env::current_dir().context("cannot resolve working directory")?,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            seed,
            rng: seed.map(|_| RNG_NAME.to_owned()),
            params,
            started_unix_ms: self.started,
            finished_unix_ms: unix_ms(),
        };
        manifest.write_next_to(outputs[0])?;
        Ok(())
    }
}

pub(crate) fn run(command: Command, argv: Vec<String>) -> Result<()> {
    let name = match &command {
        Command::Split(_) => "split",
        Command::Calibrate(_) => "calibrate",
        Command::Predict(_) => "predict",
        Command::Evaluate(_) => "evaluate",
        Command::Chart(_) => "chart",
        Command::Synth(_) => "synth",
        Command::Compare(_) => "compare",
        Command::Replay(_) => "replay",
    };
    let run = Run {
        command: name,
        argv,
        started: unix_ms(),
    };
    match command {
        Command::Split(a) => split(a, run),
        Command::Calibrate(a) => calibrate(a, run),
        Command::Predict(a) => predict(a, run),
        Command::Evaluate(a) => evaluate_cmd(a, run),
        Command::Chart(a) => chart(a, run),
        Command::Synth(a) => synth(a, run),
        Command::Compare(a) => compare(a, run),
        Command::Replay(a) => replay(a),
    }
}

fn read(path: &Path, require_labels: bool) -> Result<ScoreFile> {
    read_scores(path, require_labels).with_context(|| format!("reading {}", path.display()))
}

fn write(file: &ScoreFile, path: &Path) -> Result<()> {
    write_scores(file, path, FileFormat::from_path(path))
        .with_context(|| format!("writing {}", path.display()))
}

fn split(a: SplitArgs, run: Run) -> Result<()> {
    let input = read(&a.input, false)?;
    let s = split_training(input.rows, a.fraction, a.seed)?;
    let part = |rows| ScoreFile {
        rows,
        source: input.source.clone(),
        format_version: input.format_version,
    };
    write(&part(s.proper), &a.out_proper)?;
    write(&part(s.calibration), &a.out_calibration)?;
    run.finish(
        &[&a.input],
        &[&a.out_proper, &a.out_calibration],
        Some(a.seed),
        json!({ "proper_fraction": a.fraction }),
    )
}

fn calibrate(a: CalibrateArgs, run: Run) -> Result<()> {
    let file = read(&a.calibration_scores, true)?;
    let calibration = file.labeled_scores()?;
    let mut source = a.calibration_scores.display().to_string();
    if !file.source.is_empty() {
        source = format!("{source} ({})", file.source);
    }
    let model = fit_ivap(&calibration)
        .with_context(|| format!("fitting on {}", a.calibration_scores.display()))?
        .with_provenance(Provenance { seed: None, source });
    model.save(&a.out_model)?;
    run.finish(
        &[&a.calibration_scores],
        &[&a.out_model],
        None,
        json!({ "calibration_size": calibration.len() }),
    )
}

fn predict(a: PredictArgs, run: Run) -> Result<()> {
    let model = IvapCalibrator::load(&a.model)?;
    let test = read(&a.test_scores, false)?;
    let scores: Vec<f64> = test.rows.iter().map(|r| r.score).collect();
    let preds = model.predict_batch(&scores)?;
    let rows: Vec<PredictionRow> = test
        .rows
        .into_iter()
        .zip(preds)
        .map(|(r, prediction)| PredictionRow {
            id: r.id,
            prediction,
            label: r.label,
            target: r.target,
        })
        .collect();
    write_atomic(&a.out, render_predictions(&rows).as_bytes())?;
    run.finish(
        &[&a.model, &a.test_scores],
        &[&a.out],
        None,
        json!({ "rows": rows.len() }),
    )
}

fn load_probabilities(path: &Path) -> Result<Vec<ProbabilityRow>> {
    read_probabilities(path).with_context(|| format!("reading {}", path.display()))
}

fn records(rows: &[ProbabilityRow], path: &Path) -> Result<Vec<PredictionRecord>> {
    rows.iter()
        .map(|r| {
            r.record()
                .ok_or_else(|| anyhow!("{}: id {:?} has no label", path.display(), r.id))
        })
        .collect()
}

fn evaluate_cmd(a: EvaluateArgs, run: Run) -> Result<()> {
    let rows = load_probabilities(&a.predictions)?;
    let recs = records(&rows, &a.predictions)?;
    let options = EvalOptions {
        num_bins: a.bins,
        threshold: a.threshold,
        degree: a.degree,
    };
    let report = evaluate(&recs, &options)?;
    write_atomic(&a.out, report.to_json().as_bytes())?;
    print!("{}", report.to_key_value());
    run.finish(
        &[&a.predictions],
        &[&a.out],
        None,
        json!({ "bins": a.bins, "threshold": a.threshold, "degree": a.degree }),
    )
}

fn chart(a: ChartArgs, run: Run) -> Result<()> {
    let format: ChartFormat = a
        .out
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .parse()
        .with_context(|| format!("{}: output must end in .svg or .csv", a.out.display()))?;
    let rows = load_probabilities(&a.predictions)?;
    let bubbles = build_bubbles(&records(&rows, &a.predictions)?, a.grid)?;
    write_atomic(&a.out, render_chart(&bubbles, format)?.as_bytes())?;
    run.finish(
        &[&a.predictions],
        &[&a.out],
        None,
        json!({ "grid_step": a.grid }),
    )
}

fn synth(a: SynthArgs, run: Run) -> Result<()> {
    let config = SynthConfig {
        n: a.n,
        seed: a.seed,
        distortion: a.distortion,
        latent: a.latent,
    };
    let samples = generate(&config)?;
    write(&to_score_file(&samples, &config), &a.out)?;
    run.finish(
        &[],
        &[&a.out],
        Some(a.seed),
        json!({
            "n": a.n,
            "distortion": a.distortion.to_string(),
            "latent": a.latent.to_string(),
        }),
    )
}

#[derive(Serialize)]
struct Deltas {
    ece: f64,
    macro_f1: f64,
    log_loss: f64,
    brier: f64,
    decile_occupancy: i64,
}

#[derive(Serialize)]
struct Trial {
    raw_file: PathBuf,
    ivap_file: PathBuf,
    raw: MetricsReport,
    ivap: MetricsReport,
    /// calibrated minus raw
    delta: Deltas,
}

/// Records for `rows`, labels taken from `labels` when given.
fn labeled(
    rows: &[ProbabilityRow],
    path: &Path,
    labels: Option<&HashMap<String, u8>>,
) -> Result<Vec<PredictionRecord>> {
    let Some(labels) = labels else {
        return records(rows, path);
    };
    rows.iter()
        .map(|r| {
            let label = *labels.get(&r.id).ok_or_else(|| {
                anyhow!("{}: id {:?} not in the label file", path.display(), r.id)
            })?;
            Ok(PredictionRecord {
                probability: r.probability,
                label,
                degree_target: r.target,
            })
        })
        .collect()
}

fn compare(a: CompareArgs, run: Run) -> Result<()> {
    if a.raw.len() != a.ivap.len() {
        bail!(
            "{} --raw files but {} --ivap files; give one of each per trial",
            a.raw.len(),
            a.ivap.len()
        );
    }
    let labels = match &a.labels {
        Some(path) => Some(
            read(path, true)?
                .rows
                .into_iter()
                .map(|r| (r.id, r.label.expect("labels required on read")))
                .collect::<HashMap<_, _>>(),
        ),
        None => None,
    };

    let mut trials = Vec::with_capacity(a.raw.len());
    for (raw_path, ivap_path) in a.raw.iter().zip(&a.ivap) {
        let raw_rows = load_probabilities(raw_path)?;
        let ivap_rows = load_probabilities(ivap_path)?;
        let mut by_id: HashMap<&str, &ProbabilityRow> =
            ivap_rows.iter().map(|r| (r.id.as_str(), r)).collect();
        if by_id.len() != raw_rows.len() {
            bail!(
                "{} has {} rows but {} has {}",
                raw_path.display(),
                raw_rows.len(),
                ivap_path.display(),
                by_id.len()
            );
        }
        // calibrated rows in raw-file order
        let aligned: Vec<ProbabilityRow> = raw_rows
            .iter()
            .map(|r| {
                by_id
                    .remove(r.id.as_str())
                    .cloned()
                    .ok_or_else(|| anyhow!("id {:?} missing from {}", r.id, ivap_path.display()))
            })
            .collect::<Result<_>>()?;

        let raw_recs = labeled(&raw_rows, raw_path, labels.as_ref())?;
        let ivap_recs = labeled(&aligned, ivap_path, labels.as_ref())?;
        if let Some((r, i)) = raw_recs
            .iter()
            .zip(&ivap_recs)
            .zip(&raw_rows)
            .find_map(|((r, i), row)| (r.label != i.label).then_some((row.id.clone(), i.label)))
        {
            bail!(
                "label for id {r:?} differs between {} and {} ({i})",
                raw_path.display(),
                ivap_path.display()
            );
        }
        let degree = raw_recs
            .iter()
            .chain(&ivap_recs)
            .all(|r| r.degree_target.is_some());
        let options = EvalOptions {
            num_bins: a.bins,
            threshold: a.threshold,
            degree,
        };
        let raw = evaluate(&raw_recs, &options)
            .with_context(|| format!("evaluating {}", raw_path.display()))?;
        let ivap = evaluate(&ivap_recs, &options)
            .with_context(|| format!("evaluating {}", ivap_path.display()))?;
        let delta = Deltas {
            ece: ivap.ece - raw.ece,
            macro_f1: ivap.macro_f1 - raw.macro_f1,
            log_loss: ivap.log_loss - raw.log_loss,
            brier: ivap.brier - raw.brier,
            decile_occupancy: ivap.decile_occupancy as i64 - raw.decile_occupancy as i64,
        };
        trials.push(Trial {
            raw_file: raw_path.clone(),
            ivap_file: ivap_path.clone(),
            raw,
            ivap,
            delta,
        });
    }

    let mut text = serde_json::to_string_pretty(&json!({ "trials": trials }))?;
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    for (i, t) in trials.iter().enumerate() {
        let n = i + 1;
        println!(
            "trial={n} raw={} ivap={}",
            t.raw_file.display(),
            t.ivap_file.display()
        );
        for (name, raw, ivap, delta) in [
            ("ece", t.raw.ece, t.ivap.ece, t.delta.ece),
            (
                "macro_f1",
                t.raw.macro_f1,
                t.ivap.macro_f1,
                t.delta.macro_f1,
            ),
            (
                "log_loss",
                t.raw.log_loss,
                t.ivap.log_loss,
                t.delta.log_loss,
            ),
            ("brier", t.raw.brier, t.ivap.brier, t.delta.brier),
        ] {
            println!("trial={n} metric={name} raw={raw:.6} ivap={ivap:.6} delta={delta:+.6}");
        }
        println!(
            "trial={n} metric=decile_occupancy raw={} ivap={} delta={:+}",
            t.raw.decile_occupancy, t.ivap.decile_occupancy, t.delta.decile_occupancy
        );
    }

    let mut inputs: Vec<&Path> = a.raw.iter().chain(&a.ivap).map(PathBuf::as_path).collect();
    if let Some(l) = &a.labels {
        inputs.push(l);
    }
    run.finish(
        &inputs,
        &[&a.out],
        None,
        json!({ "bins": a.bins, "threshold": a.threshold, "trials": trials.len() }),
    )
}

fn replay(a: ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.manifest)?;
    if manifest.tool != "vak" {
        bail!("{} was not written by vak", a.manifest.display());
    }
    if manifest.cwd.is_dir() {
        std::env::set_current_dir(&manifest.cwd)
            .with_context(|| format!("cannot enter {}", manifest.cwd.display()))?;
    }
    let cli =
        Cli::try_parse_from(std::iter::once("vak".to_owned()).chain(manifest.argv.iter().cloned()))
            .map_err(|e| anyhow!("manifest arguments do not parse: {e}"))?;
    let mut command = cli.command;
    // the recorded seed wins over whatever VAK_SEED says now
    match (&mut command, manifest.seed) {
        (Command::Split(s), Some(seed)) => s.seed = seed,
        (Command::Synth(s), Some(seed)) => s.seed = seed,
        (Command::Replay(_), _) => bail!("refusing to replay a replay"),
        _ => {}
    }
    run(command, manifest.argv)
}
