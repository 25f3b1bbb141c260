use super::model::Autoregressive;
use crate::error::{Error, Result};

/// Multi-step AR forecast. `history` is in time order (most recent last);
/// each prediction is fed back as a regressor for the next step.
///
/// Unstable coefficient sets are allowed and their forecasts may grow.
pub fn ar_predict<M: Autoregressive + ?Sized>(model: &M, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let alpha = model.coefficients();
    let order = alpha.len();
    if history.len() < order {
        return Err(Error::InvalidInput(format!(
            "history of length {} shorter than model order {order}",
            history.len()
        )));
    }
    let mean = model.mean();
    // Centered lag window, most recent first.
    let mut lags: Vec<f64> = history.iter().rev().take(order).map(|v| v - mean).collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next: f64 = alpha.iter().zip(&lags).map(|(a, y)| a * y).sum();
        out.push(next + mean);
        if order > 0 {
            lags.rotate_right(1);
            lags[0] = next;
        }
    }
    Ok(out)
}
