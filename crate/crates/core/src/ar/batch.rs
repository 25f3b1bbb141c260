use nalgebra::{DMatrix, DVector};

use super::model::ArModel;
use super::series::LaggedSeries;
use crate::error::{Error, Result};

/// Ridge penalty used for conditioning when none is requested.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Smallest accepted `min(L_ii)² / max(L_ii)²` of an unregularized Cholesky factor.
const RANK_TOLERANCE: f64 = 1e-14;

/// Exponentially weighted accumulators
/// `G_t = γ G_{t-1} + φ_t φ_tᵀ` and `b_t = γ b_{t-1} + φ_t y_t`.
#[derive(Clone, Debug)]
pub struct WeightedNormalEquations {
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    forgetting: f64,
    count: usize,
}

impl WeightedNormalEquations {
    pub fn new(dim: usize, forgetting: f64) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            cross: DVector::zeros(dim),
            forgetting,
            count: 0,
        }
    }

    pub fn push(&mut self, phi: &[f64], y: f64) {
        let phi = DVector::from_column_slice(phi);
        self.gram *= self.forgetting;
        self.gram.ger(1.0, &phi, &phi, 1.0);
        self.cross *= self.forgetting;
        self.cross.axpy(y, &phi, 1.0);
        self.count += 1;
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn cross(&self) -> &DVector<f64> {
        &self.cross
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Solves `(G + λI) α = b`.
    pub fn solve(&self, ridge: f64) -> Result<DVector<f64>> {
        let dim = self.cross.len();
        if dim == 0 {
            return Ok(DVector::zeros(0));
        }
        let mut a = self.gram.clone();
        for i in 0..dim {
            a[(i, i)] += ridge;
        }
        let chol = match a.cholesky() {
            Some(c) => c,
            None if ridge == 0.0 => {
                return Err(Error::RankDeficient(format!(
                    "{dim}x{dim} information matrix is singular"
                )))
            }
            None => {
                return Err(Error::Numerical(format!(
                    "{dim}x{dim} regularized information matrix is not positive definite"
                )))
            }
        };
        if ridge == 0.0 {
            let diag = chol.l_dirty().diagonal();
            let (lo, hi) = (diag.min(), diag.max());
            if (lo * lo) < RANK_TOLERANCE * hi * hi {
                return Err(Error::RankDeficient(format!(
                    "{dim}x{dim} information matrix is numerically singular"
                )));
            }
        }
        let alpha = chol.solve(&self.cross);
        if !alpha.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite regression solution".into()));
        }
        Ok(alpha)
    }
}

pub(crate) fn validate_forgetting(forgetting: f64) -> Result<()> {
    if !(forgetting > 0.0 && forgetting <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "forgetting factor must be in (0, 1], got {forgetting}"
        )));
    }
    Ok(())
}

/// Closed-form exponentially weighted least-squares AR fit.
///
/// `α = (Σ γ^{t-j} φ_j φ_jᵀ + λI)⁻¹ Σ γ^{t-j} φ_j y_j` over all samples
/// with a full lag window; `σ²` is the mean squared one-step residual
/// under the same `γ` weights.
pub fn fit_ar_batch(series: &LaggedSeries, order: usize, forgetting: f64, ridge: f64) -> Result<ArModel> {
    fit_ar_from(series, order, order, forgetting, ridge)
}

/// Like [`fit_ar_batch`] but only uses targets at index `start` or later in
/// each segment, so that fits of different orders share one sample set.
pub fn fit_ar_from(series: &LaggedSeries, order: usize, start: usize, forgetting: f64, ridge: f64) -> Result<ArModel> {
    validate_forgetting(forgetting)?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidInput(format!("ridge must be >= 0, got {ridge}")));
    }
    let start = start.max(order);
    let samples = series.samples(order, start);
    if samples.is_empty() {
        return Err(Error::InvalidInput(format!(
            "series of length {} too short for order {order}",
            series.max_segment_len()
        )));
    }
    let mut acc = WeightedNormalEquations::new(order, forgetting);
    for (phi, y) in &samples {
        acc.push(phi, *y);
    }
    let alpha = acc.solve(ridge)?;
    let innovation_variance = weighted_residual_variance(&samples, alpha.as_slice(), forgetting);
    Ok(ArModel {
        order,
        coefficients: alpha.iter().copied().collect(),
        innovation_variance,
        mean: 0.0,
    })
}

/// `Σ w_j e_j² / Σ w_j` with `w_j = γ^{n-1-j}`.
pub(crate) fn weighted_residual_variance(samples: &[(Vec<f64>, f64)], alpha: &[f64], forgetting: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (phi, y) in samples {
        let pred: f64 = phi.iter().zip(alpha).map(|(p, a)| p * a).sum();
        let e = y - pred;
        num = forgetting * num + e * e;
        den = forgetting * den + 1.0;
    }
    num / den
}
