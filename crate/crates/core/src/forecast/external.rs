//! JSON-lines prediction files produced by external forecasters.
//!
//! One object per anchor: `{"t": int, "N": int, "D": int, "pred": [[f64; D]; N]}`
//! where `t` is the index of the last observed frame and row `h` of `pred`
//! forecasts frame `t + 1 + h`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Base,
    Corrected,
    Baseline(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastRecord {
    pub anchor_t: usize,
    pub horizon: usize,
    /// `horizon × D`.
    pub prediction: DMatrix<f64>,
    pub source: Source,
}

impl ForecastRecord {
    pub fn new(anchor_t: usize, prediction: DMatrix<f64>, source: Source) -> Result<Self> {
        if !prediction.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "prediction at anchor {anchor_t} has non-finite entries"
            )));
        }
        Ok(Self {
            anchor_t,
            horizon: prediction.nrows(),
            prediction,
            source,
        })
    }

    pub fn dims(&self) -> usize {
        self.prediction.ncols()
    }

    pub fn to_json_line(&self) -> String {
        let line = RecordLine {
            t: self.anchor_t,
            n: self.horizon,
            d: self.dims(),
            pred: self
                .prediction
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        };
        serde_json::to_string(&line).expect("record serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    t: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    pred: Vec<Vec<f64>>,
}

/// Streams validated records from a JSON-lines reader.
///
/// Blank lines are skipped. Anchors must be strictly increasing and `D`
/// constant across the file.
pub struct PredictionReader<R> {
    lines: std::io::Lines<R>,
    origin: String,
    line_no: usize,
    last_anchor: Option<usize>,
    dims: Option<usize>,
}

impl<R: BufRead> PredictionReader<R> {
    pub fn new(reader: R, origin: impl Into<String>) -> Self {
        Self {
            lines: reader.lines(),
            origin: origin.into(),
            line_no: 0,
            last_anchor: None,
            dims: None,
        }
    }

    fn parse_line(&mut self, text: &str) -> Result<ForecastRecord> {
        let line_no = self.line_no;
        let parse_err = |message: String| Error::Parse {
            path: self.origin.clone(),
            line: line_no,
            message,
        };
        let rec: RecordLine = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        let schema = |msg: String| Error::Schema(format!("{} line {line_no}: {msg}", self.origin));
        if rec.pred.len() != rec.n {
            return Err(schema(format!("expected N = {} rows, found {}", rec.n, rec.pred.len())));
        }
        if let Some((h, row)) = rec.pred.iter().enumerate().find(|(_, r)| r.len() != rec.d) {
            return Err(schema(format!(
                "expected D = {} values in row {h}, found {}",
                rec.d,
                row.len()
            )));
        }
        if let Some(d) = self.dims {
            if d != rec.d {
                return Err(schema(format!(
                    "expected D = {d} as in earlier records, found {}",
                    rec.d
                )));
            }
        }
        if let Some(prev) = self.last_anchor {
            if rec.t <= prev {
                return Err(schema(format!("anchor {} does not increase (previous {prev})", rec.t)));
            }
        }
        if rec.pred.iter().flatten().any(|v| !v.is_finite()) {
            return Err(schema("non-finite prediction value".into()));
        }
        self.dims = Some(rec.d);
        self.last_anchor = Some(rec.t);
        let flat: Vec<f64> = rec.pred.into_iter().flatten().collect();
        let prediction = DMatrix::from_row_slice(rec.n, rec.d, &flat);
        ForecastRecord::new(rec.t, prediction, Source::Base)
    }
}

impl<R: BufRead> Iterator for PredictionReader<R> {
    type Item = Result<ForecastRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let text = match line {
                Ok(t) => t,
                Err(e) => return Some(Err(Error::io(&self.origin, e))),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(self.parse_line(&text));
        }
    }
}

pub fn load_external_predictions(path: impl AsRef<Path>) -> Result<Vec<ForecastRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    PredictionReader::new(BufReader::new(file), path.display().to_string()).collect()
}

pub fn write_predictions_jsonl(path: impl AsRef<Path>, records: &[ForecastRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        writeln!(out, "{}", r.to_json_line()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Replays recorded forecasts, looked up by anchor.
#[derive(Clone, Debug)]
pub struct ExternalPredictor {
    name: String,
    records: BTreeMap<usize, DMatrix<f64>>,
    current: Option<usize>,
}

impl ExternalPredictor {
    pub fn new(name: impl Into<String>, records: Vec<ForecastRecord>) -> Self {
        Self {
            name: name.into(),
            records: records.into_iter().map(|r| (r.anchor_t, r.prediction)).collect(),
            current: None,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "external".into());
        Ok(Self::new(name, load_external_predictions(path)?))
    }

    pub fn anchors(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.keys().copied()
    }
}

impl Predictor for ExternalPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn observe(&mut self, anchor: usize, _window: &DMatrix<f64>) -> Result<()> {
        if !self.records.contains_key(&anchor) {
            return Err(Error::InvalidInput(format!(
                "{}: no external prediction for anchor {anchor}",
                self.name
            )));
        }
        self.current = Some(anchor);
        Ok(())
    }

    fn predict(&mut self, horizon: usize) -> Result<DMatrix<f64>> {
        let anchor = self
            .current
            .ok_or_else(|| Error::InvalidInput("predict called before observe".into()))?;
        let pred = &self.records[&anchor];
        if pred.nrows() < horizon {
            return Err(Error::InvalidInput(format!(
                "{}: anchor {anchor} has {} predicted frames, {horizon} requested",
                self.name,
                pred.nrows()
            )));
        }
        Ok(pred.rows(0, horizon).into_owned())
    }
}
