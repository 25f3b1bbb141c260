//! Linear ridge regression from a flattened observation window to the
//! flattened forecast block.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub lambda: f64,
    /// Z-score each input feature with training statistics and append a
    /// (penalized) bias feature.
    pub standardize: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            standardize: true,
        }
    }
}

/// `W` maps features of a row-major flattened `M × D` window to a
/// row-major flattened `N × D` forecast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub observe_frames: usize,
    pub predict_frames: usize,
    pub dims: usize,
    pub config: RidgeConfig,
    pub weights: DMatrix<f64>,
    pub feature_mean: DVector<f64>,
    pub feature_scale: DVector<f64>,
}

fn flatten(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
}

impl RidgeModel {
    fn features(&self, window: &DMatrix<f64>) -> DVector<f64> {
        let raw = flatten(window)
            .zip(self.feature_mean.iter().zip(self.feature_scale.iter()))
            .map(|(v, (mu, s))| (v - mu) / s);
        if self.config.standardize {
            DVector::from_iterator(self.weights.ncols(), raw.chain(std::iter::once(1.0)))
        } else {
            DVector::from_iterator(self.weights.ncols(), raw)
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len()
    }
}

/// Minimizes `Σ ‖target - W·feat(input)‖² + λ‖W‖²_F` over the training pairs.
pub fn ridge_regression_fit(pairs: &[(DMatrix<f64>, DMatrix<f64>)], config: RidgeConfig) -> Result<RidgeModel> {
    let (first_in, first_out) = pairs
        .first()
        .ok_or_else(|| Error::InvalidInput("ridge regression needs at least one training pair".into()))?;
    let (m, d) = first_in.shape();
    let n = first_out.nrows();
    if first_out.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "target has {} dimensions, input has {d}",
            first_out.ncols()
        )));
    }
    if !(config.lambda >= 0.0 && config.lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be >= 0, got {}",
            config.lambda
        )));
    }
    for (i, (x, y)) in pairs.iter().enumerate() {
        if x.shape() != (m, d) || y.shape() != (n, d) {
            return Err(Error::InvalidInput(format!(
                "pair {i}: shapes {:?} -> {:?}, expected {:?} -> {:?}",
                x.shape(),
                y.shape(),
                (m, d),
                (n, d)
            )));
        }
        if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("pair {i} contains non-finite values")));
        }
    }

    let raw_dim = m * d;
    let samples = pairs.len();
    let (feature_mean, feature_scale) = if config.standardize {
        let mut mean = DVector::zeros(raw_dim);
        for (x, _) in pairs {
            for (i, v) in flatten(x).enumerate() {
                mean[i] += v;
            }
        }
        mean /= samples as f64;
        let mut var = DVector::zeros(raw_dim);
        for (x, _) in pairs {
            for (i, v) in flatten(x).enumerate() {
                var[i] += (v - mean[i]).powi(2);
            }
        }
        let scale = var.map(|v: f64| {
            let s = (v / samples as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        (mean, scale)
    } else {
        (DVector::zeros(raw_dim), DVector::from_element(raw_dim, 1.0))
    };

    let mut model = RidgeModel {
        observe_frames: m,
        predict_frames: n,
        dims: d,
        config,
        weights: DMatrix::zeros(n * d, raw_dim + usize::from(config.standardize)),
        feature_mean,
        feature_scale,
    };
    let f = model.weights.ncols();
    let mut gram = DMatrix::<f64>::zeros(f, f);
    let mut cross = DMatrix::<f64>::zeros(f, n * d);
    for (x, y) in pairs {
        let phi = model.features(x);
        gram.ger(1.0, &phi, &phi, 1.0);
        let target = DVector::from_iterator(n * d, flatten(y));
        cross.ger(1.0, &phi, &target, 1.0);
    }
    for i in 0..f {
        gram[(i, i)] += config.lambda;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        if config.lambda == 0.0 {
            Error::RankDeficient(format!("{f}x{f} ridge Gram matrix is singular"))
        } else {
            Error::Numerical("ridge Gram matrix is not positive definite".into())
        }
    })?;
    let wt = chol.solve(&cross);
    if !wt.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite ridge weights".into()));
    }
    model.weights = wt.transpose();
    Ok(model)
}

/// `W · feat(window)` reshaped to `N × D`.
pub fn ridge_regression_predict(model: &RidgeModel, window: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if window.shape() != (model.observe_frames, model.dims) {
        return Err(Error::InvalidInput(format!(
            "window shape {:?}, model expects {:?}",
            window.shape(),
            (model.observe_frames, model.dims)
        )));
    }
    let out = &model.weights * model.features(window);
    Ok(DMatrix::from_row_slice(
        model.predict_frames,
        model.dims,
        out.as_slice(),
    ))
}

/// Adapter exposing a fitted [`RidgeModel`] as a [`Predictor`]. Forecasts
/// beyond the trained horizon are not available.
#[derive(Clone, Debug)]
pub struct RidgePredictor {
    model: RidgeModel,
    window: Option<DMatrix<f64>>,
}

impl RidgePredictor {
    pub fn new(model: RidgeModel) -> Self {
        Self { model, window: None }
    }

    pub fn model(&self) -> &RidgeModel {
        &self.model
    }
}

impl Predictor for RidgePredictor {
    fn name(&self) -> &str {
        "ridge"
    }

    fn observe(&mut self, _anchor: usize, window: &DMatrix<f64>) -> Result<()> {
        let m = self.model.observe_frames;
        if window.nrows() < m {
            return Err(Error::InvalidInput(format!(
                "ridge needs {m} observed frames, got {}",
                window.nrows()
            )));
        }
        self.window = Some(window.rows(window.nrows() - m, m).into_owned());
        Ok(())
    }

    fn predict(&mut self, horizon: usize) -> Result<DMatrix<f64>> {
        let window = self
            .window
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("predict called before observe".into()))?;
        if horizon > self.model.predict_frames {
            return Err(Error::InvalidInput(format!(
                "ridge model was trained for {} frames, {horizon} requested",
                self.model.predict_frames
            )));
        }
        let full = ridge_regression_predict(&self.model, window)?;
        Ok(full.rows(0, horizon).into_owned())
    }

    fn reset(&mut self) {
        self.window = None;
    }

    fn parameter_count(&self) -> usize {
        self.model.parameter_count()
    }
}
