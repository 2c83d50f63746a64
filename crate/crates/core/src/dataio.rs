//! Score files: the boundary through which external model outputs enter.
//!
//! CSV files carry the header `id,score,label,target`; `label` and `target`
//! may be empty (or the columns absent). JSONL files hold one object per line
//! with the same keys. Either format may start with metadata: CSV comment
//! lines `# format_version: N` / `# source: TEXT`, or a JSONL object with a
//! `format_version` key on the first line. Floats are written in shortest
//! round-trip form, so reading back a written file gives the same values.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ivap::{LabeledScore, MultiProbability};
use crate::metrics::PredictionRecord;

pub const SCORE_FORMAT_VERSION: u32 = 1;
pub const SCORE_COLUMNS: [&str; 4] = ["id", "score", "label", "target"];
pub const PREDICTION_COLUMNS: [&str; 6] = ["id", "p0", "p1", "merged", "label", "target"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl FileFormat {
    /// `.jsonl` / `.ndjson` are JSONL, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") =>
            {
                FileFormat::Jsonl
            }
            _ => FileFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub score: f64,
    pub label: Option<u8>,
    pub target: Option<f64>,
}

impl ScoreRow {
    pub fn labeled_score(&self) -> Option<LabeledScore> {
        self.label.map(|label| LabeledScore {
            score: self.score,
            label,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFile {
    pub rows: Vec<ScoreRow>,
    pub source: String,
    pub format_version: u32,
}

impl ScoreFile {
    pub fn new(rows: Vec<ScoreRow>) -> Self {
        ScoreFile {
            rows,
            source: String::new(),
            format_version: SCORE_FORMAT_VERSION,
        }
    }

    /// Source text is kept on one line.
    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into().replace(['\n', '\r'], " ");
        self
    }

    /// Calibration examples; fails if any row is unlabeled.
    pub fn labeled_scores(&self) -> Result<Vec<LabeledScore>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.labeled_score().ok_or_else(|| Error::MissingLabels {
                    line: i + 1,
                    id: r.id.clone(),
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.rows.iter().enumerate() {
            let line = i + 1;
            check_row(r).map_err(|reason| Error::Parse { line, reason })?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId {
                    line,
                    id: r.id.clone(),
                });
            }
        }
        Ok(())
    }
}

fn check_row(r: &ScoreRow) -> std::result::Result<(), String> {
    if !r.score.is_finite() {
        return Err(format!("non-finite score {}", r.score));
    }
    if let Some(l) = r.label {
        if l > 1 {
            return Err(format!("label must be 0 or 1, got {l}"));
        }
    }
    if let Some(t) = r.target {
        if !(0.0..=1.0).contains(&t) {
            return Err(format!("target {t} outside [0, 1]"));
        }
    }
    Ok(())
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// parsing helpers

fn parse_label(s: &str) -> std::result::Result<Option<u8>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(0.0) => Ok(Some(0)),
        Ok(1.0) => Ok(Some(1)),
        _ => Err(format!("label must be 0 or 1, got {s:?}")),
    }
}

fn parse_real(name: &str, s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v: f64 = s
        .parse()
        .map_err(|_| format!("{name} {s:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {name} {s:?}"));
    }
    Ok(v)
}

fn parse_opt_real(name: &str, s: &str) -> std::result::Result<Option<f64>, String> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_real(name, s).map(Some)
    }
}

#[derive(Default)]
struct Meta {
    format_version: Option<u32>,
    source: Option<String>,
}

struct CsvTable {
    meta: Meta,
    header: Vec<String>,
    header_line: usize,
    /// (1-based line number in the file, fields)
    records: Vec<(usize, csv::StringRecord)>,
}

impl CsvTable {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn parse_csv_table(text: &str) -> Result<CsvTable> {
    let mut meta = Meta::default();
    let mut offset = 0usize;
    let mut body = text;
    while let Some(line) = body.lines().next() {
        let Some(comment) = line.strip_prefix('#') else {
            break;
        };
        offset += 1;
        if let Some((key, value)) = comment.split_once(':') {
            match key.trim() {
                "format_version" => {
                    let v = value.trim().parse().map_err(|_| Error::Parse {
                        line: offset,
                        reason: format!("bad format_version {:?}", value.trim()),
                    })?;
                    meta.format_version = Some(v);
                }
                "source" => meta.source = Some(value.strip_prefix(' ').unwrap_or(value).to_owned()),
                _ => {}
            }
        }
        body = body.get(line.len()..).unwrap_or("");
        body = body
            .strip_prefix("\r\n")
            .or_else(|| body.strip_prefix('\n'))
            .unwrap_or(body);
    }

    if body.trim().is_empty() {
        // a blank file is an empty table
        return Ok(CsvTable {
            meta,
            header: Vec::new(),
            header_line: offset + 1,
            records: Vec::new(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(body.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(1) + offset;
        Error::Parse {
            line,
            reason: e.to_string(),
        }
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    if header.len() == 1 && header[0].is_empty() {
        return Err(Error::Parse {
            line: offset + 1,
            reason: "missing header".into(),
        });
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0) + offset;
        records.push((line, rec));
    }
    Ok(CsvTable {
        meta,
        header,
        header_line: offset + 1,
        records,
    })
}

fn check_header(header: &[String], allowed: &[&str], required: &[&str], line: usize) -> Result<()> {
    for h in header {
        if !allowed.contains(&h.as_str()) {
            return Err(Error::Parse {
                line,
                reason: format!("unexpected column {h:?}"),
            });
        }
    }
    for r in required {
        if !header.iter().any(|h| h == r) {
            return Err(Error::Parse {
                line,
                reason: format!("missing column {r:?}"),
            });
        }
    }
    Ok(())
}

fn finish(rows: Vec<(usize, ScoreRow)>, meta: Meta, require_labels: bool) -> Result<ScoreFile> {
    let mut seen = HashSet::new();
    for (line, r) in &rows {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId {
                line: *line,
                id: r.id.clone(),
            });
        }
        if require_labels && r.label.is_none() {
            return Err(Error::MissingLabels {
                line: *line,
                id: r.id.clone(),
            });
        }
    }
    Ok(ScoreFile {
        rows: rows.into_iter().map(|(_, r)| r).collect(),
        source: meta.source.unwrap_or_default(),
        format_version: meta.format_version.unwrap_or(SCORE_FORMAT_VERSION),
    })
}

fn parse_scores_csv(text: &str, require_labels: bool) -> Result<ScoreFile> {
    let table = parse_csv_table(text)?;
    if table.header.is_empty() {
        return finish(Vec::new(), table.meta, require_labels);
    }
    let header_line = table.header_line;
    check_header(&table.header, &SCORE_COLUMNS, &["id", "score"], header_line)?;
    let id_col = table.column("id").expect("checked");
    let score_col = table.column("score").expect("checked");
    let label_col = table.column("label");
    let target_col = table.column("target");

    let mut rows = Vec::with_capacity(table.records.len());
    for (line, rec) in &table.records {
        let line = *line;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("");
        let parsed = (|| -> std::result::Result<ScoreRow, String> {
            let id = field(Some(id_col)).to_owned();
            if id.is_empty() {
                return Err("empty id".into());
            }
            let row = ScoreRow {
                id,
                score: parse_real("score", field(Some(score_col)))?,
                label: parse_label(field(label_col))?,
                target: parse_opt_real("target", field(target_col))?,
            };
            check_row(&row)?;
            Ok(row)
        })();
        rows.push((
            line,
            parsed.map_err(|reason| Error::Parse { line, reason })?,
        ));
    }
    finish(rows, table.meta, require_labels)
}

fn json_opt_real(
    obj: &serde_json::Map<String, Value>,
    key: &str,
) -> std::result::Result<Option<f64>, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n.as_f64().map(Some).ok_or_else(|| format!("bad {key}")),
        Some(other) => Err(format!("{key} must be a number, got {other}")),
    }
}

fn parse_scores_jsonl(text: &str, require_labels: bool) -> Result<ScoreFile> {
    let mut meta = Meta::default();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Parse { line, reason };
        let value: Value = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(bad("expected a JSON object".into()));
        };
        if obj.contains_key("format_version") && !obj.contains_key("id") {
            if !rows.is_empty() || meta.format_version.is_some() {
                return Err(bad("metadata must be the first line".into()));
            }
            meta.format_version = Some(
                obj["format_version"]
                    .as_u64()
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| bad("bad format_version".into()))?,
            );
            meta.source = obj.get("source").and_then(Value::as_str).map(str::to_owned);
            continue;
        }
        let parsed = (|| -> std::result::Result<ScoreRow, String> {
            for key in obj.keys() {
                if !SCORE_COLUMNS.contains(&key.as_str()) {
                    return Err(format!("unexpected key {key:?}"));
                }
            }
            let id = match obj.get("id") {
                Some(Value::String(s)) if !s.is_empty() => s.clone(),
                _ => return Err("id must be a non-empty string".into()),
            };
            let score = json_opt_real(&obj, "score")?.ok_or("missing score")?;
            let label = match obj.get("label") {
                None | Some(Value::Null) => None,
                Some(Value::Number(n)) => parse_label(&n.to_string())?,
                Some(other) => return Err(format!("label must be 0 or 1, got {other}")),
            };
            let row = ScoreRow {
                id,
                score,
                label,
                target: json_opt_real(&obj, "target")?,
            };
            check_row(&row)?;
            Ok(row)
        })();
        rows.push((line, parsed.map_err(bad)?));
    }
    finish(rows, meta, require_labels)
}

/// Parses score-file text. Rejects non-finite scores, labels outside {0, 1},
/// targets outside [0, 1] and duplicate ids, naming the offending line.
pub fn parse_scores(text: &str, format: FileFormat, require_labels: bool) -> Result<ScoreFile> {
    match format {
        FileFormat::Csv => parse_scores_csv(text, require_labels),
        FileFormat::Jsonl => parse_scores_jsonl(text, require_labels),
    }
}

pub fn read_scores(path: impl AsRef<Path>, require_labels: bool) -> Result<ScoreFile> {
    let path = path.as_ref();
    parse_scores(
        &read_text(path)?,
        FileFormat::from_path(path),
        require_labels,
    )
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn fmt_opt_label(v: Option<u8>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct JsonRow<'a> {
    id: &'a str,
    score: f64,
    label: Option<u8>,
    target: Option<f64>,
}

pub fn render_scores(file: &ScoreFile, format: FileFormat) -> Result<String> {
    file.validate()?;
    match format {
        FileFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "# format_version: {}", file.format_version);
            if !file.source.is_empty() {
                let _ = writeln!(out, "# source: {}", file.source);
            }
            let mut w = csv_writer();
            w.write_record(SCORE_COLUMNS).expect("in-memory write");
            for r in &file.rows {
                w.write_record([
                    r.id.clone(),
                    format!("{:?}", r.score),
                    fmt_opt_label(r.label),
                    fmt_opt_f64(r.target),
                ])
                .expect("in-memory write");
            }
            let bytes = w.into_inner().expect("in-memory flush");
            out.push_str(std::str::from_utf8(&bytes).expect("utf-8 in, utf-8 out"));
            Ok(out)
        }
        FileFormat::Jsonl => {
            let mut out = serde_json::json!({
                "format_version": file.format_version,
                "source": file.source,
            })
            .to_string();
            out.push('\n');
            for r in &file.rows {
                let row = JsonRow {
                    id: &r.id,
                    score: r.score,
                    label: r.label,
                    target: r.target,
                };
                out.push_str(&serde_json::to_string(&row).expect("row serializes"));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn write_scores(file: &ScoreFile, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
    write_atomic(path.as_ref(), render_scores(file, format)?.as_bytes())
}

// ---------------------------------------------------------------------------
// predictions

/// One row of calibrated output.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub prediction: MultiProbability,
    pub label: Option<u8>,
    pub target: Option<f64>,
}

/// CSV with header `id,p0,p1,merged,label,target`.
pub fn render_predictions(rows: &[PredictionRow]) -> String {
    let mut w = csv_writer();
    w.write_record(PREDICTION_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.id.clone(),
            format!("{:?}", r.prediction.p0),
            format!("{:?}", r.prediction.p1),
            format!("{:?}", r.prediction.merged),
            fmt_opt_label(r.label),
            fmt_opt_f64(r.target),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// A probability of label 1 for one id, from either a prediction file
/// (`merged` column) or a score file whose scores are probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub id: String,
    pub probability: f64,
    pub label: Option<u8>,
    pub target: Option<f64>,
}

impl ProbabilityRow {
    pub fn record(&self) -> Option<PredictionRecord> {
        self.label.map(|label| PredictionRecord {
            probability: self.probability,
            label,
            degree_target: self.target,
        })
    }
}

pub fn parse_probabilities(text: &str, format: FileFormat) -> Result<Vec<ProbabilityRow>> {
    let check_prob = |line: usize, p: f64| {
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::Parse {
                line,
                reason: format!("probability {p} outside [0, 1]"),
            })
        }
    };

    if format == FileFormat::Jsonl {
        let file = parse_scores_jsonl(text, false)?;
        return file
            .rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                check_prob(i + 1, r.score)?;
                Ok(ProbabilityRow {
                    id: r.id,
                    probability: r.score,
                    label: r.label,
                    target: r.target,
                })
            })
            .collect();
    }

    let table = parse_csv_table(text)?;
    if table.column("merged").is_none() {
        // plain score file
        let file = parse_scores_csv(text, false)?;
        let lines: Vec<usize> = table.records.iter().map(|(l, _)| *l).collect();
        return file
            .rows
            .into_iter()
            .zip(lines)
            .map(|(r, line)| {
                check_prob(line, r.score)?;
                Ok(ProbabilityRow {
                    id: r.id,
                    probability: r.score,
                    label: r.label,
                    target: r.target,
                })
            })
            .collect();
    }

    let header_line = table.header_line;
    check_header(
        &table.header,
        &PREDICTION_COLUMNS,
        &["id", "merged"],
        header_line,
    )?;
    let col = |n: &str| table.column(n);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(table.records.len());
    for (line, rec) in &table.records {
        let line = *line;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).unwrap_or("");
        let parsed = (|| -> std::result::Result<ProbabilityRow, String> {
            let id = field(col("id")).to_owned();
            if id.is_empty() {
                return Err("empty id".into());
            }
            let probability = parse_real("merged", field(col("merged")))?;
            let label = parse_label(field(col("label")))?;
            let target = parse_opt_real("target", field(col("target")))?;
            if let Some(t) = target {
                if !(0.0..=1.0).contains(&t) {
                    return Err(format!("target {t} outside [0, 1]"));
                }
            }
            Ok(ProbabilityRow {
                id,
                probability,
                label,
                target,
            })
        })();
        let row = parsed.map_err(|reason| Error::Parse { line, reason })?;
        check_prob(line, row.probability)?;
        if !seen.insert(row.id.clone()) {
            return Err(Error::DuplicateId { line, id: row.id });
        }
        out.push(row);
    }
    Ok(out)
}

pub fn read_probabilities(path: impl AsRef<Path>) -> Result<Vec<ProbabilityRow>> {
    let path = path.as_ref();
    parse_probabilities(&read_text(path)?, FileFormat::from_path(path))
}
