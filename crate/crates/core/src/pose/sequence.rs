use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::euler::{rotmat_to_euler, EulerTriple, EULER_ORDER};
use super::quaternion::{expmap_to_quat, ExpMapVector};
use crate::error::{Error, Result};

/// Dimensions per pose on the benchmark skeleton.
pub const BENCHMARK_POSITION_DIMS: usize = 66;
pub const BENCHMARK_ANGLE_DIMS: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Joint coordinates in centimeters, `[x, y, z]` per joint.
    PositionsCm,
    /// Exponential-map vectors, one triple per joint.
    Expmap,
    /// Unstructured real-valued channels (synthetic data).
    Raw,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::PositionsCm => "positions_cm",
            Representation::Expmap => "expmap",
            Representation::Raw => "raw",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positions_cm" => Ok(Representation::PositionsCm),
            "expmap" => Ok(Representation::Expmap),
            "raw" => Ok(Representation::Raw),
            other => Err(Error::InvalidInput(format!(
                "unknown representation {other:?} (expected positions_cm, expmap or raw)"
            ))),
        }
    }
}

/// A `T × D` series of one individual's poses.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    pub frames: DMatrix<f64>,
    pub representation: Representation,
    pub fps: f64,
    pub subject_id: String,
    pub action: String,
    pub dim_labels: Vec<String>,
    /// Euler order used when angles are converted for evaluation.
    pub euler_order: String,
}

impl PoseSequence {
    /// Builds a validated sequence. Empty `dim_labels` are filled with `d0, d1, ...`.
    pub fn new(
        frames: DMatrix<f64>,
        representation: Representation,
        fps: f64,
        subject_id: impl Into<String>,
        action: impl Into<String>,
        dim_labels: Vec<String>,
    ) -> Result<Self> {
        let dim_labels = if dim_labels.is_empty() {
            (0..frames.ncols()).map(|d| format!("d{d}")).collect()
        } else {
            dim_labels
        };
        let seq = Self {
            frames,
            representation,
            fps,
            subject_id: subject_id.into(),
            action: action.into(),
            dim_labels,
            euler_order: EULER_ORDER.to_string(),
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.nrows() == 0 {
            return Err(Error::InvalidInput("pose sequence has no frames".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidInput(format!("fps must be > 0, got {}", self.fps)));
        }
        if self.dim_labels.len() != self.dims() {
            return Err(Error::InvalidInput(format!(
                "{} dimension labels for {} dimensions",
                self.dim_labels.len(),
                self.dims()
            )));
        }
        match self.representation {
            Representation::PositionsCm | Representation::Expmap if !self.dims().is_multiple_of(3) => {
                return Err(Error::InvalidInput(format!(
                    "{} representation needs a multiple of 3 dimensions, got {}",
                    self.representation,
                    self.dims()
                )));
            }
            _ => {}
        }
        if self.euler_order != EULER_ORDER {
            return Err(Error::InvalidInput(format!(
                "unsupported Euler order {:?} (only {EULER_ORDER})",
                self.euler_order
            )));
        }
        for (t, row) in self.frames.row_iter().enumerate() {
            if let Some(d) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at frame {t}, dimension {d}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.frames.ncols()
    }

    /// Column `d` as an owned series.
    pub fn channel(&self, d: usize) -> Vec<f64> {
        self.frames.column(d).iter().copied().collect()
    }

    pub fn frame(&self, t: usize) -> DVector<f64> {
        self.frames.row(t).transpose()
    }
}

/// Converts one row of exponential-map triples into Euler triples (Z-X-Y).
pub fn expmap_row_to_euler(row: &[f64]) -> Result<Vec<EulerTriple>> {
    if !row.len().is_multiple_of(3) {
        return Err(Error::InvalidInput(format!(
            "expmap row length {} is not a multiple of 3",
            row.len()
        )));
    }
    row.chunks_exact(3)
        .map(|c| {
            let q = expmap_to_quat(&ExpMapVector::new(c[0], c[1], c[2]))?;
            rotmat_to_euler(&q.to_rotation_matrix())
        })
        .collect()
}

/// Converts every row of an expmap matrix into flattened Euler triples.
pub fn expmap_matrix_to_euler(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        for (j, e) in expmap_row_to_euler(&row)?.iter().enumerate() {
            out[(r, 3 * j)] = e.z;
            out[(r, 3 * j + 1)] = e.x;
            out[(r, 3 * j + 2)] = e.y;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        let mut m = DMatrix::zeros(2, 3);
        assert!(PoseSequence::new(m.clone(), Representation::PositionsCm, 25.0, "s", "a", vec![]).is_ok());
        m[(1, 2)] = f64::NAN;
        let err = PoseSequence::new(m, Representation::Raw, 25.0, "s", "a", vec![]).unwrap_err();
        assert!(err.to_string().contains("frame 1"));
        let m = DMatrix::zeros(2, 4);
        assert!(PoseSequence::new(m.clone(), Representation::Expmap, 25.0, "s", "a", vec![]).is_err());
        assert!(PoseSequence::new(m.clone(), Representation::Raw, 0.0, "s", "a", vec![]).is_err());
        assert!(PoseSequence::new(DMatrix::zeros(0, 3), Representation::Raw, 25.0, "s", "a", vec![]).is_err());
    }

    #[test]
    fn representation_parse() {
        assert_eq!("expmap".parse::<Representation>().unwrap(), Representation::Expmap);
        assert!("quaternion".parse::<Representation>().is_err());
    }

    #[test]
    fn zero_expmap_is_zero_euler() {
        let e = expmap_matrix_to_euler(&DMatrix::zeros(2, 6)).unwrap();
        assert!(e.iter().all(|v| *v == 0.0));
    }
}
