//! Versioned on-disk form of a calibrator.
//!
//! The artifact stores the calibration set itself rather than the lookup
//! tables; loading refits, which reproduces the tables exactly. Scores are
//! written in shortest round-trip form so a save/load cycle is bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit_ivap, IvapCalibrator, LabeledScore, Provenance};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "vak-ivap-calibrator";

#[derive(Serialize, Deserialize)]
struct Artifact {
    format: String,
    format_version: u32,
    provenance: Provenance,
    calibration_size: usize,
    calibration: Vec<LabeledScore>,
}

impl IvapCalibrator {
    pub fn to_json(&self) -> String {
        let artifact = Artifact {
            format: FORMAT_NAME.to_owned(),
            format_version: FORMAT_VERSION,
            provenance: self.provenance.clone(),
            calibration_size: self.calibration.len(),
            calibration: self.calibration.clone(),
        };
        let mut out = serde_json::to_string_pretty(&artifact).expect("artifact serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Artifact =
            serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if artifact.format != FORMAT_NAME {
            return Err(Error::Artifact(format!(
                "unknown format {:?}",
                artifact.format
            )));
        }
        if artifact.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                artifact.format_version
            )));
        }
        if artifact.calibration_size != artifact.calibration.len() {
            return Err(Error::Artifact(format!(
                "calibration_size {} does not match {} stored entries",
                artifact.calibration_size,
                artifact.calibration.len()
            )));
        }
        Ok(fit_ivap(&artifact.calibration)?.with_provenance(artifact.provenance))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::dataio::write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
