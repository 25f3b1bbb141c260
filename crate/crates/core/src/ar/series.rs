use std::f64::consts::{PI, TAU};

use crate::error::{ensure_finite, Error, Result};

/// A real-valued series, optionally split into independent segments, with
/// lag-regressor construction `φ_t = (y_{t-1}, …, y_{t-P})`.
///
/// Regressors never span a segment boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct LaggedSeries {
    segments: Vec<Vec<f64>>,
}

impl LaggedSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::from_segments(vec![values])
    }

    pub fn from_segments(segments: Vec<Vec<f64>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("series has no segments".into()));
        }
        for s in &segments {
            ensure_finite(s, "series")?;
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Vec<f64>] {
        &self.segments
    }

    /// Total number of values over all segments.
    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the longest segment.
    pub fn max_segment_len(&self) -> usize {
        self.segments.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `φ_t` for index `t` of a single-segment series; `None` while `t < order`.
    pub fn regressor(&self, t: usize, order: usize) -> Option<Vec<f64>> {
        let values = &self.segments[0];
        if t < order || t >= values.len() {
            return None;
        }
        Some((1..=order).map(|k| values[t - k]).collect())
    }

    /// Every `(φ_t, y_t)` pair with `t >= start` within each segment, in
    /// time order. `start` must be at least `order`.
    pub fn samples(&self, order: usize, start: usize) -> Vec<(Vec<f64>, f64)> {
        debug_assert!(start >= order);
        let mut out = Vec::new();
        for values in &self.segments {
            for t in start..values.len() {
                out.push(((1..=order).map(|k| values[t - k]).collect(), values[t]));
            }
        }
        out
    }

    /// Number of usable samples when regressors start at `start`.
    pub fn usable(&self, start: usize) -> usize {
        self.segments.iter().map(|s| s.len().saturating_sub(start)).sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        self.segments.iter().flatten().sum::<f64>() / n as f64
    }

    /// Copy with `offset` subtracted from every value.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| s.iter().map(|v| v - offset).collect())
                .collect(),
        }
    }
}

/// Removes 2π jumps so that consecutive angles differ by at most π.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut shift = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            let prev = angles[i - 1];
            let d = a - prev;
            if d > PI {
                shift -= TAU * ((d - PI) / TAU).ceil();
            } else if d < -PI {
                shift += TAU * ((-d - PI) / TAU).ceil();
            }
        }
        out.push(a + shift);
    }
    out
}
