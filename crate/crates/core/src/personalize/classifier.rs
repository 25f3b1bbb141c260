//! One-vs-rest linear SVM that assigns a short observation window to a
//! known individual.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    /// The raw window values, row-major.
    Window,
    /// Raw window values followed by the within-window autocorrelation of
    /// each dimension at lags `1..=max_lag`.
    WindowAutocorr { max_lag: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub window: usize,
    pub stride: usize,
    pub features: FeatureMap,
    pub epochs: usize,
    /// L2 regularization strength of the hinge-loss objective.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            window: 10,
            stride: 5,
            features: FeatureMap::WindowAutocorr { max_lag: 2 },
            epochs: 30,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub classes: Vec<String>,
    pub window: usize,
    pub dims: usize,
    pub features: FeatureMap,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    /// One weight vector per class; the last entry multiplies a constant 1.
    pub weights: Vec<Vec<f64>>,
}

fn autocorr(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    if lag >= n {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if denom <= f64::EPSILON * f64::EPSILON * n as f64 {
        return 0.0;
    }
    (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum::<f64>() / denom
}

/// Feature vector of a `M × D` window.
pub fn window_features(window: &DMatrix<f64>, map: FeatureMap) -> Vec<f64> {
    let (m, d) = window.shape();
    let mut out: Vec<f64> = (0..m)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|rc| window[rc])
        .collect();
    if let FeatureMap::WindowAutocorr { max_lag } = map {
        for c in 0..d {
            let col: Vec<f64> = window.column(c).iter().copied().collect();
            out.extend((1..=max_lag).map(|k| autocorr(&col, k)));
        }
    }
    out
}

/// Consecutive `window × D` slices of `seq` taken every `stride` frames.
pub fn training_windows(seq: &DMatrix<f64>, window: usize, stride: usize) -> Vec<DMatrix<f64>> {
    if window == 0 || stride == 0 || seq.nrows() < window {
        return Vec::new();
    }
    (0..=seq.nrows() - window)
        .step_by(stride)
        .map(|s| seq.rows(s, window).into_owned())
        .collect()
}

impl LinearClassifier {
    fn standardized(&self, window: &DMatrix<f64>) -> Vec<f64> {
        let mut f = window_features(window, self.features);
        for (v, (mu, s)) in f.iter_mut().zip(self.feature_mean.iter().zip(&self.feature_scale)) {
            *v = (*v - mu) / s;
        }
        f.push(1.0);
        f
    }

    /// Decision value per class.
    pub fn scores(&self, window: &DMatrix<f64>) -> Result<Vec<f64>> {
        if window.shape() != (self.window, self.dims) {
            return Err(Error::InvalidInput(format!(
                "window shape {:?}, classifier expects {:?}",
                window.shape(),
                (self.window, self.dims)
            )));
        }
        if !window.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("window has non-finite values".into()));
        }
        let x = self.standardized(window);
        Ok(self.weights.iter().map(|w| dot(w, &x)).collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let clf: Self = serde_json::from_str(&text)?;
        if clf.classes.is_empty() || clf.weights.len() != clf.classes.len() {
            return Err(Error::Schema(format!(
                "{}: classes and weights disagree",
                path.display()
            )));
        }
        Ok(clf)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on labelled `M × D` windows with Pegasos-style stochastic
/// sub-gradient descent, one binary problem per class.
pub fn classifier_train(samples: &[(DMatrix<f64>, String)], config: &ClassifierConfig) -> Result<LinearClassifier> {
    let (first, _) = samples
        .first()
        .ok_or_else(|| Error::InvalidInput("classifier needs at least one training window".into()))?;
    let shape = first.shape();
    if let Some((w, _)) = samples.iter().find(|(w, _)| w.shape() != shape) {
        return Err(Error::InvalidInput(format!(
            "training window shape {:?} differs from {:?}",
            w.shape(),
            shape
        )));
    }
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be > 0, got {}",
            config.lambda
        )));
    }
    if samples.iter().any(|(w, _)| !w.iter().all(|v| v.is_finite())) {
        return Err(Error::InvalidInput("training window has non-finite values".into()));
    }
    let mut classes: Vec<String> = samples.iter().map(|(_, l)| l.clone()).collect();
    classes.sort();
    classes.dedup();

    let raw: Vec<Vec<f64>> = samples
        .iter()
        .map(|(w, _)| window_features(w, config.features))
        .collect();
    let f = raw[0].len();
    let n = raw.len() as f64;
    let mean: Vec<f64> = (0..f).map(|j| raw.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..f)
        .map(|j| {
            let s = (raw.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut clf = LinearClassifier {
        classes,
        window: shape.0,
        dims: shape.1,
        features: config.features,
        feature_mean: mean,
        feature_scale: scale,
        weights: Vec::new(),
    };
    let xs: Vec<Vec<f64>> = samples.iter().map(|(w, _)| clf.standardized(w)).collect();
    let labels: Vec<usize> = samples
        .iter()
        .map(|(_, l)| clf.classes.binary_search(l).expect("label is a class"))
        .collect();

    if clf.classes.len() == 1 {
        clf.weights = vec![vec![0.0; f + 1]];
        return Ok(clf);
    }
    let radius = 1.0 / config.lambda.sqrt();
    clf.weights = (0..clf.classes.len())
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(c as u64));
            let mut order: Vec<usize> = (0..xs.len()).collect();
            let mut w = vec![0.0; f + 1];
            let mut step = 0u64;
            for _ in 0..config.epochs.max(1) {
                order.shuffle(&mut rng);
                for &i in &order {
                    step += 1;
                    let eta = 1.0 / (config.lambda * step as f64);
                    let y = if labels[i] == c { 1.0 } else { -1.0 };
                    let margin = y * dot(&w, &xs[i]);
                    let shrink = 1.0 - eta * config.lambda;
                    w.iter_mut().for_each(|v| *v *= shrink);
                    if margin < 1.0 {
                        for (v, x) in w.iter_mut().zip(&xs[i]) {
                            *v += eta * y * x;
                        }
                    }
                    let norm = dot(&w, &w).sqrt();
                    if norm > radius {
                        w.iter_mut().for_each(|v| *v *= radius / norm);
                    }
                }
            }
            w
        })
        .collect();
    Ok(clf)
}

/// The class with the highest decision value; ties go to the first class
/// in sorted order.
pub fn classifier_predict(clf: &LinearClassifier, window: &DMatrix<f64>) -> Result<String> {
    let scores = clf.scores(window)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(clf.classes[best].clone())
}
