//! Pose CSV files with a JSON sidecar describing them.
//!
//! The CSV has a header row of dimension labels and one row per frame.
//! The sidecar sits next to it with the same stem and a `.json` extension.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{center_and_normalize, PoseSequence, Representation, Skeleton, EULER_ORDER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub subject_id: String,
    pub action: String,
    pub fps: f64,
    pub representation: String,
    /// Expected number of columns, checked against the CSV header.
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    /// Skeleton JSON, relative to the sidecar's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<PathBuf>,
    /// Center and rescale positions to the skeleton's limb lengths.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_order: Option<String>,
}

impl Sidecar {
    pub fn for_sequence(seq: &PoseSequence) -> Self {
        Self {
            subject_id: seq.subject_id.clone(),
            action: seq.action.clone(),
            fps: seq.fps,
            representation: seq.representation.to_string(),
            dims: Some(seq.dims()),
            skeleton: None,
            normalize: false,
            euler_order: None,
        }
    }
}

/// `walk.csv` → `walk.json`.
pub fn sidecar_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn read_sidecar(path: &Path) -> Result<Sidecar> {
    if !path.is_file() {
        return Err(Error::Config(format!(
            "missing sidecar file, expected {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn read_frames(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let origin = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: origin.clone(),
            line: 1,
            message: e.to_string(),
        })?;
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: origin.clone(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let d = labels.len();
    if d == 0 || labels.iter().all(|l| l.is_empty()) {
        return Err(Error::Parse {
            path: origin,
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            path: origin.clone(),
            line: e.position().map_or(row + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: origin.clone(),
            line,
            message: format!("row {row}: {message}"),
        };
        if record.len() != d {
            return Err(parse_err(format!("expected {d} values, found {}", record.len())));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("column {:?}: cannot parse {field:?}", labels[c])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("column {:?}: non-finite value {field}", labels[c])));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            path: origin,
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok((labels, DMatrix::from_row_slice(rows, d, &values)))
}

/// Reads a pose CSV and its sidecar (`sidecar = None` uses the default
/// location from [`sidecar_path_for`]).
pub fn ingest(csv_path: impl AsRef<Path>, sidecar: Option<&Path>) -> Result<PoseSequence> {
    let csv_path = csv_path.as_ref();
    let sidecar_path = sidecar.map_or_else(|| sidecar_path_for(csv_path), Path::to_path_buf);
    let meta = read_sidecar(&sidecar_path)?;
    let representation: Representation = meta
        .representation
        .parse()
        .map_err(|e: Error| Error::Schema(format!("{}: {e}", sidecar_path.display())))?;
    let (labels, frames) = read_frames(csv_path)?;
    if let Some(d) = meta.dims {
        if d != labels.len() {
            return Err(Error::Schema(format!(
                "{}: header has {} columns, sidecar declares D = {d}",
                csv_path.display(),
                labels.len()
            )));
        }
    }
    let mut seq = PoseSequence::new(frames, representation, meta.fps, meta.subject_id, meta.action, labels)?;
    if let Some(order) = meta.euler_order {
        seq.euler_order = order;
        seq.validate()?;
    }
    if meta.normalize {
        let skel_rel = meta.skeleton.ok_or_else(|| {
            Error::Config(format!(
                "{}: normalize requires a skeleton path",
                sidecar_path.display()
            ))
        })?;
        let base = sidecar_path.parent().unwrap_or_else(|| Path::new("."));
        let skel = Skeleton::load(base.join(skel_rel))?;
        seq = center_and_normalize(&seq, &skel)?;
    }
    Ok(seq)
}

/// Writes `<dir>/<stem>.csv` and its sidecar; returns the CSV path.
pub fn write_sequence(dir: impl AsRef<Path>, stem: &str, seq: &PoseSequence) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let io_err = |e: csv::Error| Error::Numerical(format!("{}: {e}", csv_path.display()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(io_err)?;
    w.write_record(&seq.dim_labels).map_err(io_err)?;
    for row in seq.frames.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let mut meta = Sidecar::for_sequence(seq);
    if seq.euler_order != EULER_ORDER {
        meta.euler_order = Some(seq.euler_order.clone());
    }
    let side = sidecar_path_for(&csv_path);
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&side, e))?;
    Ok(csv_path)
}
