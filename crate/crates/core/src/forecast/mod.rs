//! Base predictors and the residual corrector that personalizes them.

mod baseline;
mod corrector;
mod external;
mod ridge;

use nalgebra::DMatrix;

use crate::error::Result;

pub use baseline::{zero_velocity_predict, ZeroVelocity};
pub use corrector::{residual_correct, CorrectedForecast, CorrectorConfig, ResidualCorrector};
pub use external::{
    load_external_predictions, write_predictions_jsonl, ExternalPredictor, ForecastRecord, PredictionReader, Source,
};
pub use ridge::{ridge_regression_fit, ridge_regression_predict, RidgeConfig, RidgeModel, RidgePredictor};

/// A forecaster that sees the most recent `M × D` window and predicts the
/// next `N` frames.
///
/// `observe` is always called before `predict`. `anchor` is the index of
/// the last frame in `window`. Implementations must return exactly
/// `horizon × D` and be deterministic for a given observation history.
pub trait Predictor {
    fn name(&self) -> &str;

    fn observe(&mut self, anchor: usize, window: &DMatrix<f64>) -> Result<()>;

    fn predict(&mut self, horizon: usize) -> Result<DMatrix<f64>>;

    /// Forget everything carried across anchors.
    fn reset(&mut self) {}

    /// Number of fitted parameters, for reporting.
    fn parameter_count(&self) -> usize {
        0
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn observe(&mut self, anchor: usize, window: &DMatrix<f64>) -> Result<()> {
        (**self).observe(anchor, window)
    }

    fn predict(&mut self, horizon: usize) -> Result<DMatrix<f64>> {
        (**self).predict(horizon)
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn parameter_count(&self) -> usize {
        (**self).parameter_count()
    }
}
