use nalgebra::DMatrix;

use super::Predictor;
use crate::error::{Error, Result};

/// Repeats the last observed row `horizon` times.
pub fn zero_velocity_predict(window: &DMatrix<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    if window.nrows() == 0 {
        return Err(Error::InvalidInput(
            "zero-velocity needs at least one observed frame".into(),
        ));
    }
    let last = window.row(window.nrows() - 1);
    Ok(DMatrix::from_fn(horizon, window.ncols(), |_, d| last[d]))
}

#[derive(Clone, Debug, Default)]
pub struct ZeroVelocity {
    window: Option<DMatrix<f64>>,
}

impl ZeroVelocity {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Predictor for ZeroVelocity {
    fn name(&self) -> &str {
        "zero-velocity"
    }

    fn observe(&mut self, _anchor: usize, window: &DMatrix<f64>) -> Result<()> {
        self.window = Some(
            window
                .rows(window.nrows().saturating_sub(1), window.nrows().min(1))
                .into_owned(),
        );
        Ok(())
    }

    fn predict(&mut self, horizon: usize) -> Result<DMatrix<f64>> {
        match &self.window {
            Some(w) => zero_velocity_predict(w, horizon),
            None => Err(Error::InvalidInput("predict called before observe".into())),
        }
    }

    fn reset(&mut self) {
        self.window = None;
    }
}
