//! `report.json` and plot-ready curve CSVs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ProtocolConfig;
use super::protocol::{ProtocolOutcome, SequenceSummary, SkippedSequence};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// JSON schema (draft 2020-12) that every `report.json` satisfies.
pub const REPORT_SCHEMA: &str = include_str!("report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub variant: String,
    pub metric: String,
    pub unit: String,
    pub fps: f64,
    /// File name of this curve's CSV inside the report directory.
    pub csv: String,
    pub horizon_ms: Vec<f64>,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    /// Excluded from `determinism_hash`.
    pub generated_at: String,
    /// SHA-256 of the report serialized with empty `generated_at` and
    /// `determinism_hash`.
    pub determinism_hash: String,
    pub predictor: String,
    pub config: ProtocolConfig,
    pub curves: Vec<CurveEntry>,
    pub objectives: BTreeMap<String, BTreeMap<String, f64>>,
    pub parameter_counts: BTreeMap<String, usize>,
    pub sequences: Vec<SequenceSummary>,
    pub skipped: Vec<SkippedSequence>,
    pub anchors_total: usize,
}

impl Report {
    pub fn new(outcome: &ProtocolOutcome, config: &ProtocolConfig, predictor: &str, generated_at: String) -> Self {
        let mut curves = Vec::new();
        for (variant, per_metric) in &outcome.curves {
            for (metric, curve) in per_metric {
                let keep: Vec<usize> = (0..curve.horizon()).filter(|&k| curve.counts[k] > 0).collect();
                curves.push(CurveEntry {
                    variant: variant.clone(),
                    metric: metric.clone(),
                    unit: curve.metric.unit().to_string(),
                    fps: curve.fps,
                    csv: format!("curve_{variant}_{metric}.csv"),
                    horizon_ms: keep.iter().map(|&k| curve.horizon_ms(k + 1)).collect(),
                    values: keep.iter().map(|&k| curve.values[k]).collect(),
                    counts: keep.iter().map(|&k| curve.counts[k]).collect(),
                });
            }
        }
        let mut report = Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at,
            determinism_hash: String::new(),
            predictor: predictor.to_string(),
            config: config.clone(),
            curves,
            objectives: outcome.objectives.clone(),
            parameter_counts: outcome.parameter_counts.clone(),
            sequences: outcome.sequences.clone(),
            skipped: outcome.skipped.clone(),
            anchors_total: outcome.sequences.iter().map(|s| s.anchors).sum(),
        };
        report.determinism_hash = report.compute_hash();
        report
    }

    pub fn compute_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.generated_at.clear();
        stripped.determinism_hash.clear();
        let bytes = serde_json::to_vec(&stripped).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: Self = serde_json::from_str(&text)?;
        if report.compute_hash() != report.determinism_hash {
            return Err(Error::Schema(format!(
                "{}: determinism hash does not match contents",
                path.display()
            )));
        }
        Ok(report)
    }

    /// Combined CSV of all curves: `variant,horizon_ms,metric,value,count`.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("variant,horizon_ms,metric,value,count\n");
        for c in &self.curves {
            for k in 0..c.values.len() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.variant, c.horizon_ms[k], c.metric, c.values[k], c.counts[k]
                ));
            }
        }
        out
    }

    fn curve_csv(c: &CurveEntry) -> String {
        let mut out = String::from("horizon_ms,metric,value,count\n");
        for k in 0..c.values.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                c.horizon_ms[k], c.metric, c.values[k], c.counts[k]
            ));
        }
        out
    }

    /// Writes `report.json`, `curves.csv`, one CSV per curve and
    /// `report.schema.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files: Vec<(PathBuf, String)> = vec![
            (dir.join("report.json"), self.to_json_string()),
            (dir.join("curves.csv"), self.curves_csv()),
            (dir.join("report.schema.json"), REPORT_SCHEMA.to_string()),
        ];
        for c in &self.curves {
            files.push((dir.join(&c.csv), Self::curve_csv(c)));
        }
        for (path, text) in &files {
            let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}
