//! Forecast error metrics.
//!
//! Both metrics average a per-triple Euclidean norm over forecast steps and
//! triples: joint coordinates in cm for MPJE, Euler angle triples in radians
//! for MEA. Angle differences are wrapped into `(-π, π]` first, so angles
//! that differ by whole turns compare equal.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastRecord;
use crate::pose::{expmap_matrix_to_euler, wrap_angle, PoseSequence, Representation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mpje,
    /// Mean Euclidean norm per Euler triple.
    Mea,
    /// Mean absolute error per angle component.
    MeaFlat,
    /// Mean squared error per channel, for unstructured channels.
    Mse,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Mpje => "mpje",
            Metric::Mea => "mea",
            Metric::MeaFlat => "mea_flat",
            Metric::Mse => "mse",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Metric::Mpje => "cm",
            Metric::Mea | Metric::MeaFlat => "rad",
            Metric::Mse => "unit^2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpje" => Ok(Metric::Mpje),
            "mea" => Ok(Metric::Mea),
            "mea_flat" => Ok(Metric::MeaFlat),
            "mse" => Ok(Metric::Mse),
            other => Err(Error::InvalidInput(format!(
                "unknown metric {other:?} (expected mpje, mea, mea_flat or mse)"
            ))),
        }
    }
}

fn check_shapes(pred: &DMatrix<f64>, truth: &DMatrix<f64>, metric: Metric) -> Result<()> {
    if pred.shape() != truth.shape() {
        return Err(Error::InvalidInput(format!(
            "prediction shape {:?} differs from ground truth {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    if pred.ncols() == 0 || (metric != Metric::Mse && !pred.ncols().is_multiple_of(3)) {
        return Err(Error::InvalidInput(format!(
            "{} columns is not a positive multiple of 3",
            pred.ncols()
        )));
    }
    if !pred.iter().chain(truth.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("non-finite metric input".into()));
    }
    Ok(())
}

/// Per-step error for `N × 3K` (or `N × 3L`) blocks; one value per row.
/// [`Metric::Mse`] accepts any number of columns.
pub fn per_step_errors(pred: &DMatrix<f64>, truth: &DMatrix<f64>, metric: Metric) -> Result<Vec<f64>> {
    check_shapes(pred, truth, metric)?;
    let triples = pred.ncols() / 3;
    let diff = |r: usize, c: usize| {
        let d = pred[(r, c)] - truth[(r, c)];
        match metric {
            Metric::Mpje | Metric::Mse => d,
            Metric::Mea | Metric::MeaFlat => wrap_angle(d),
        }
    };
    Ok((0..pred.nrows())
        .map(|r| match metric {
            Metric::Mpje | Metric::Mea => {
                (0..triples)
                    .map(|k| {
                        let (a, b, c) = (diff(r, 3 * k), diff(r, 3 * k + 1), diff(r, 3 * k + 2));
                        (a * a + b * b + c * c).sqrt()
                    })
                    .sum::<f64>()
                    / triples as f64
            }
            Metric::MeaFlat => (0..pred.ncols()).map(|c| diff(r, c).abs()).sum::<f64>() / pred.ncols() as f64,
            Metric::Mse => (0..pred.ncols()).map(|c| diff(r, c).powi(2)).sum::<f64>() / pred.ncols() as f64,
        })
        .collect())
}

fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no forecast steps to average".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean per-joint position error over an `N × 3K` block, in the input units.
pub fn mpje(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean(&per_step_errors(pred, truth, Metric::Mpje)?)
}

/// Mean Euler-angle error over an `N × 3L` block of angle triples.
pub fn mea(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean(&per_step_errors(pred, truth, Metric::Mea)?)
}

/// Component-wise variant of [`mea`]: mean absolute wrapped difference over
/// all `3L` angles.
pub fn mea_flat(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    mean(&per_step_errors(pred, truth, Metric::MeaFlat)?)
}

/// `(1/I) Σ_i (1/T_i) Σ_t e_{i,t}`: anchors are averaged within each
/// individual first, then individuals are averaged with equal weight.
pub fn aggregate_objective(per_individual: &[Vec<f64>]) -> Result<f64> {
    if per_individual.is_empty() {
        return Err(Error::InvalidInput("aggregate over zero individuals".into()));
    }
    let mut total = 0.0;
    for (i, errors) in per_individual.iter().enumerate() {
        if errors.is_empty() {
            return Err(Error::InvalidInput(format!("individual {i} has no anchors")));
        }
        total += errors.iter().sum::<f64>() / errors.len() as f64;
    }
    Ok(total / per_individual.len() as f64)
}

/// Per-horizon forecast error averaged over anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub metric: Metric,
    pub fps: f64,
    /// `values[h - 1]` is the mean error `h` frames ahead.
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ErrorCurve {
    pub fn empty(metric: Metric, fps: f64, horizon: usize) -> Self {
        Self {
            metric,
            fps,
            values: vec![0.0; horizon],
            counts: vec![0; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// Folds per-step errors of one anchor into the running means.
    pub fn add_anchor(&mut self, step_errors: &[f64]) {
        if step_errors.len() > self.values.len() {
            self.values.resize(step_errors.len(), 0.0);
            self.counts.resize(step_errors.len(), 0);
        }
        for (h, &e) in step_errors.iter().enumerate() {
            self.counts[h] += 1;
            self.values[h] += (e - self.values[h]) / self.counts[h] as f64;
        }
    }

    /// Pools another curve's anchors into this one.
    pub fn merge(&mut self, other: &ErrorCurve) -> Result<()> {
        if other.metric != self.metric {
            return Err(Error::InvalidInput(format!(
                "cannot merge {} curve into {} curve",
                other.metric, self.metric
            )));
        }
        if other.values.len() > self.values.len() {
            self.values.resize(other.values.len(), 0.0);
            self.counts.resize(other.values.len(), 0);
        }
        for h in 0..other.values.len() {
            let n = self.counts[h] + other.counts[h];
            if n > 0 {
                self.values[h] =
                    (self.values[h] * self.counts[h] as f64 + other.values[h] * other.counts[h] as f64) / n as f64;
            }
            self.counts[h] = n;
        }
        Ok(())
    }

    pub fn horizon_ms(&self, h: usize) -> f64 {
        h as f64 * 1000.0 / self.fps
    }

    /// CSV with header `horizon_ms,metric,value,count`; horizons with no
    /// anchors are omitted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "horizon_ms,metric,value,count")?;
        for h in 1..=self.values.len() {
            if self.counts[h - 1] == 0 {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{}",
                self.horizon_ms(h),
                self.metric,
                self.values[h - 1],
                self.counts[h - 1]
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Ground truth rows in the space a metric is evaluated in.
pub(crate) fn metric_space(m: &DMatrix<f64>, representation: Representation, metric: Metric) -> Result<DMatrix<f64>> {
    match (representation, metric) {
        (Representation::Expmap, Metric::Mea | Metric::MeaFlat) => expmap_matrix_to_euler(m),
        _ => Ok(m.clone()),
    }
}

/// Curve over a stream of forecast records scored against `truth`.
///
/// For expmap sequences the angle metrics compare Euler angles obtained
/// from both prediction and ground truth.
pub fn error_curve<'a, I>(records: I, truth: &PoseSequence, metric: Metric) -> Result<ErrorCurve>
where
    I: IntoIterator<Item = &'a ForecastRecord>,
{
    let mut curve = ErrorCurve::empty(metric, truth.fps, 0);
    for rec in records {
        let n = rec.horizon;
        if rec.anchor_t + n >= truth.len() {
            return Err(Error::InvalidInput(format!(
                "anchor {} with horizon {n} runs past the {} ground-truth frames",
                rec.anchor_t,
                truth.len()
            )));
        }
        let gt = truth.frames.rows(rec.anchor_t + 1, n).into_owned();
        let gt = metric_space(&gt, truth.representation, metric)?;
        let pred = metric_space(&rec.prediction, truth.representation, metric)?;
        curve.add_anchor(&per_step_errors(&pred, &gt, metric)?);
    }
    Ok(curve)
}
