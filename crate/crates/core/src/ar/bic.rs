use serde::{Deserialize, Serialize};

use super::batch::{fit_ar_from, DEFAULT_RIDGE};
use super::series::LaggedSeries;
use crate::error::{Error, Result};

/// Residual variances at or below this fraction of the order-0 variance
/// count as an exact fit.
const EXACT_FIT_RATIO: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BicSelection {
    pub order: usize,
    /// `n ln σ̂²_P + P ln n` for each candidate order; `-inf` for exact fits.
    pub scores: Vec<f64>,
    pub residual_variances: Vec<f64>,
    /// Number of samples shared by every candidate fit.
    pub samples: usize,
    /// True when the selected order reproduces the series exactly.
    pub exact_fit: bool,
}

/// Picks the AR order in `0..=max_order` minimizing BIC.
///
/// Every order is fitted on the same samples (targets from index
/// `max_order` onward) so the scores are comparable. Ties go to the smaller
/// order. When some order fits exactly the smallest such order is returned
/// with `exact_fit` set.
pub fn bic_order_select(series: &LaggedSeries, max_order: usize, forgetting: f64) -> Result<BicSelection> {
    let n = series.usable(max_order);
    if n <= max_order + 1 {
        return Err(Error::InvalidInput(format!(
            "{n} usable samples are too few for orders up to {max_order}"
        )));
    }
    let ln_n = (n as f64).ln();
    let mut variances = Vec::with_capacity(max_order + 1);
    for p in 0..=max_order {
        // Unregularized where possible so exact fits stay exact.
        let model = match fit_ar_from(series, p, max_order, forgetting, 0.0) {
            Err(Error::RankDeficient(_)) => fit_ar_from(series, p, max_order, forgetting, DEFAULT_RIDGE)?,
            other => other?,
        };
        variances.push(model.innovation_variance);
    }
    let floor = EXACT_FIT_RATIO * variances[0];
    let exact = variances.iter().position(|&v| v <= floor);
    let scores: Vec<f64> = variances
        .iter()
        .enumerate()
        .map(|(p, &v)| {
            if v <= floor {
                f64::NEG_INFINITY
            } else {
                n as f64 * v.ln() + p as f64 * ln_n
            }
        })
        .collect();
    let order = match exact {
        Some(p) => p,
        None => {
            let mut best = 0;
            for p in 1..scores.len() {
                if scores[p] < scores[best] {
                    best = p;
                }
            }
            best
        }
    };
    Ok(BicSelection {
        order,
        scores,
        residual_variances: variances,
        samples: n,
        exact_fit: exact.is_some(),
    })
}
