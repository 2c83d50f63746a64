//! Reliability bubble charts.
//!
//! Predictions are snapped to a probability grid; each occupied grid point
//! becomes a bubble at (grid probability, observed accuracy) whose area is
//! proportional to the number of predictions it holds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PredictionRecord;

pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const CSV_HEADER: &str = "probability,accuracy,count";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub probability: f64,
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartFormat {
    Svg,
    Csv,
}

impl FromStr for ChartFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(ChartFormat::Svg),
            "csv" => Ok(ChartFormat::Csv),
            other => Err(Error::invalid(format!("unknown chart format {other:?}"))),
        }
    }
}

pub fn build_bubbles(records: &[PredictionRecord], grid_step: f64) -> Result<Vec<Bubble>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::invalid(format!(
            "grid step {grid_step} outside (0, 0.5]"
        )));
    }
    // grid index -> (count, positives)
    let mut cells: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for r in records {
        if !(0.0..=1.0).contains(&r.probability) || r.label > 1 {
            return Err(Error::invalid(format!("invalid prediction record {r:?}")));
        }
        let cell = (r.probability / grid_step).round() as u64;
        let e = cells.entry(cell).or_default();
        e.0 += 1;
        e.1 += usize::from(r.label);
    }
    Ok(cells
        .into_iter()
        .map(|(cell, (count, positives))| Bubble {
            probability: (cell as f64 * grid_step).min(1.0),
            accuracy: positives as f64 / count as f64,
            count,
        })
        .collect())
}

pub fn render_chart(bubbles: &[Bubble], format: ChartFormat) -> Result<String> {
    if bubbles.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(match format {
        ChartFormat::Csv => render_csv(bubbles),
        ChartFormat::Svg => render_svg(bubbles),
    })
}

fn render_csv(bubbles: &[Bubble]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for b in bubbles {
        let _ = writeln!(out, "{:?},{:?},{}", b.probability, b.accuracy, b.count);
    }
    out
}

/// Parses the CSV produced by [`render_chart`].
pub fn parse_bubbles_csv(text: &str) -> Result<Vec<Bubble>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected header {CSV_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Parse {
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        out.push(Bubble {
            probability: num(fields[0])?,
            accuracy: num(fields[1])?,
            count: fields[2]
                .parse()
                .map_err(|e| bad(format!("{:?}: {e}", fields[2])))?,
        });
    }
    Ok(out)
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
const MAX_RADIUS: f64 = 24.0;

fn render_svg(bubbles: &[Bubble]) -> String {
    let plot = SIZE - 2.0 * MARGIN;
    let px = |p: f64| MARGIN + p * plot;
    let py = |a: f64| SIZE - MARGIN - a * plot;
    let max_count = bubbles.iter().map(|b| b.count).max().unwrap_or(1) as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    for i in 0..=10 {
        let t = f64::from(i) / 10.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{t:.1}</text>"#,
            px(t),
            SIZE - MARGIN + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{t:.1}</text>"#,
            MARGIN - 6.0,
            py(t) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line class="diagonal" x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">output probability</text>"#,
        SIZE / 2.0,
        SIZE - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 20 {})">observed accuracy</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    for b in bubbles {
        // area tracks count
        let r = MAX_RADIUS * (b.count as f64 / max_count).sqrt();
        let _ = writeln!(
            s,
            r#"<circle cx="{:?}" cy="{:?}" r="{:?}" data-count="{}" fill="steelblue" fill-opacity="0.5" stroke="navy"/>"#,
            px(b.probability),
            py(b.accuracy),
            r,
            b.count
        );
    }
    s.push_str("</svg>\n");
    s
}
