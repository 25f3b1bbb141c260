use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// A fixed-coefficient AR model `ŷ_t = μ + Σ_k α_k (y_{t-k} - μ)`.
///
/// `mean` is 0 for models fitted on zero-mean residual series and is
/// omitted from the JSON form in that case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub innovation_variance: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub mean: f64,
}

impl ArModel {
    pub fn new(coefficients: Vec<f64>, innovation_variance: f64) -> Result<Self> {
        let m = Self {
            order: coefficients.len(),
            coefficients,
            innovation_variance,
            mean: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn zero_order(innovation_variance: f64, mean: f64) -> Self {
        Self {
            order: 0,
            coefficients: Vec::new(),
            innovation_variance,
            mean,
        }
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.order {
            return Err(Error::Schema(format!(
                "AR model of order {} has {} coefficients",
                self.order,
                self.coefficients.len()
            )));
        }
        if !self.coefficients.iter().all(|a| a.is_finite()) || !self.mean.is_finite() {
            return Err(Error::Schema("AR model has non-finite parameters".into()));
        }
        if !(self.innovation_variance.is_finite() && self.innovation_variance >= 0.0) {
            return Err(Error::Schema(format!(
                "innovation variance must be finite and >= 0, got {}",
                self.innovation_variance
            )));
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("AR model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: ArModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Anything that exposes AR coefficients for prediction.
pub trait Autoregressive {
    /// `α_1..α_P`, where `α_1` multiplies the most recent value.
    fn coefficients(&self) -> &[f64];

    fn mean(&self) -> f64 {
        0.0
    }

    fn order(&self) -> usize {
        self.coefficients().len()
    }
}

impl Autoregressive for ArModel {
    fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    fn mean(&self) -> f64 {
        self.mean
    }
}

/// Whether all roots of `1 - Σ a_k z^k` lie outside the unit circle,
/// checked by stepping the coefficients down to reflection coefficients.
pub fn is_stable(coefficients: &[f64]) -> bool {
    let mut a = coefficients.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - k * k;
        a = (0..p - 1).map(|j| (a[j] + k * a[p - 2 - j]) / denom).collect();
    }
    true
}
