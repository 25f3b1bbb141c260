//! The recursive AR residual corrector.
//!
//! The base predictor is treated as a trend model. Its one-step residuals
//! `r_t = x_t - x̂_t` are modeled per dimension by a time-varying AR process
//! estimated with RLS, and the AR forecast of future residuals is added to
//! the base forecast. Only one-step residuals are used for estimation;
//! longer horizons are extrapolated.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ar::{ar_predict, is_stable, rls_init, RlsState, DEFAULT_FORGETTING, DEFAULT_INIT_SCALE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectorConfig {
    pub order: usize,
    pub forgetting: f64,
    pub init_scale: f64,
    /// Pass the base through for dimensions whose current coefficient
    /// estimate is not a stable AR polynomial.
    pub stable_only: bool,
}

impl Default for CorrectorConfig {
    fn default() -> Self {
        Self {
            order: 1,
            forgetting: DEFAULT_FORGETTING,
            init_scale: DEFAULT_INIT_SCALE,
            stable_only: true,
        }
    }
}

/// A base forecast together with the additive correction applied to it.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectedForecast {
    /// The base prediction, unchanged.
    pub base: DMatrix<f64>,
    pub correction: DMatrix<f64>,
}

impl CorrectedForecast {
    pub fn corrected(&self) -> DMatrix<f64> {
        &self.base + &self.correction
    }
}

#[derive(Clone, Debug)]
pub struct ResidualCorrector {
    config: CorrectorConfig,
    dims: usize,
    states: Vec<RlsState>,
    /// Most recent `order` residuals per dimension, oldest first.
    residuals: Vec<VecDeque<f64>>,
    /// The base's forecast of the next frame, made at the previous step.
    pending: Option<DVector<f64>>,
}

impl ResidualCorrector {
    pub fn new(dims: usize, config: CorrectorConfig) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidInput("corrector needs at least one dimension".into()));
        }
        let state = rls_init(config.order, config.forgetting, config.init_scale)?;
        Ok(Self {
            config,
            dims,
            states: vec![state; dims],
            residuals: vec![VecDeque::with_capacity(config.order + 1); dims],
            pending: None,
        })
    }

    pub fn config(&self) -> &CorrectorConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn states(&self) -> &[RlsState] {
        &self.states
    }

    /// Latest residual per dimension, if any.
    pub fn last_residuals(&self) -> Option<DVector<f64>> {
        if self.residuals[0].is_empty() {
            return None;
        }
        Some(DVector::from_iterator(
            self.dims,
            self.residuals.iter().map(|r| *r.back().expect("non-empty")),
        ))
    }

    /// AR coefficients per dimension.
    pub fn parameter_count(&self) -> usize {
        self.dims * self.config.order
    }

    /// Scalars held in the estimator state: coefficients plus the `P × P`
    /// inverse-information matrix per dimension.
    pub fn state_size(&self) -> usize {
        self.dims * (self.config.order + self.config.order * self.config.order)
    }

    pub fn reset(&mut self) {
        for s in &mut self.states {
            s.reset();
        }
        for r in &mut self.residuals {
            r.clear();
        }
        self.pending = None;
    }

    /// Consumes the newly observed frame and the base forecast made from it.
    ///
    /// The residual of the base's previous one-step forecast updates each
    /// dimension's RLS state; the returned correction is the AR forecast of
    /// the residual for each horizon. Before enough residuals exist the
    /// correction is zero, as it is for a dimension whose estimate is
    /// unstable when `stable_only` is set.
    pub fn step(&mut self, observed: &[f64], base_prediction: &DMatrix<f64>) -> Result<CorrectedForecast> {
        if observed.len() != self.dims || base_prediction.ncols() != self.dims {
            return Err(Error::InvalidInput(format!(
                "corrector has {} dimensions, got frame of {} and prediction of {}",
                self.dims,
                observed.len(),
                base_prediction.ncols()
            )));
        }
        if base_prediction.nrows() == 0 {
            return Err(Error::InvalidInput("base prediction has no rows".into()));
        }
        if !observed.iter().chain(base_prediction.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite corrector input".into()));
        }
        let order = self.config.order;

        if let Some(prev) = self.pending.take() {
            for d in 0..self.dims {
                let r = observed[d] - prev[d];
                let hist = &mut self.residuals[d];
                if hist.len() == order {
                    // φ = (r_{t-1}, …, r_{t-P}), most recent first.
                    let phi: Vec<f64> = hist.iter().rev().copied().collect();
                    self.states[d].update(&phi, r)?;
                }
                if hist.len() == order {
                    hist.pop_front();
                }
                hist.push_back(r);
            }
        }
        self.pending = Some(base_prediction.row(0).transpose());

        let horizon = base_prediction.nrows();
        let mut correction = DMatrix::zeros(horizon, self.dims);
        for d in 0..self.dims {
            let hist = &self.residuals[d];
            if hist.len() < order {
                continue;
            }
            if self.config.stable_only && !is_stable(self.states[d].coefficient_vector().as_slice()) {
                continue;
            }
            let history: Vec<f64> = hist.iter().copied().collect();
            let future = ar_predict(&self.states[d], &history, horizon)?;
            for (h, v) in future.into_iter().enumerate() {
                correction[(h, d)] = v;
            }
        }
        Ok(CorrectedForecast {
            base: base_prediction.clone(),
            correction,
        })
    }
}

/// Functional entry point: see [`ResidualCorrector::step`].
pub fn residual_correct(
    state: &mut ResidualCorrector,
    observed: &[f64],
    base_prediction: &DMatrix<f64>,
) -> Result<CorrectedForecast> {
    state.step(observed, base_prediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::Autoregressive;

    #[test]
    fn cold_start_passes_base_through() {
        let mut c = ResidualCorrector::new(2, CorrectorConfig::default()).unwrap();
        let base = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = c.step(&[0.5, 0.5], &base).unwrap();
        assert_eq!(out.corrected(), base);
        assert!(out.correction.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_residuals_leave_base_unchanged() {
        let mut c = ResidualCorrector::new(1, CorrectorConfig::default()).unwrap();
        let mut x = 0.0;
        for _ in 0..20 {
            // Base always forecasts the next value exactly.
            let base = DMatrix::from_column_slice(2, 1, &[x + 1.0, x + 2.0]);
            let out = c.step(&[x], &base).unwrap();
            assert_eq!(out.corrected(), base);
            x += 1.0;
        }
    }

    #[test]
    fn correction_is_geometric_extrapolation() {
        let mut c = ResidualCorrector::new(
            1,
            CorrectorConfig {
                forgetting: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let mut r = 1.0;
        let mut out = None;
        // Base always predicts 0, so residuals are the observations.
        for _ in 0..30 {
            out = Some(c.step(&[r], &DMatrix::zeros(4, 1)).unwrap());
            r *= 0.8;
        }
        let out = out.unwrap();
        let alpha = c.states()[0].coefficients()[0];
        assert!((alpha - 0.8).abs() < 1e-3);
        let last = c.last_residuals().unwrap()[0];
        for h in 0..4 {
            let expected = alpha.powi(h as i32 + 1) * last;
            assert!((out.correction[(h, 0)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn unstable_estimate_passes_through() {
        let cfg = CorrectorConfig {
            forgetting: 1.0,
            ..Default::default()
        };
        let mut c = ResidualCorrector::new(1, cfg).unwrap();
        let mut r = 0.01;
        let mut out = None;
        // Growing residuals drive the estimate above 1.
        for _ in 0..10 {
            out = Some(c.step(&[r], &DMatrix::zeros(3, 1)).unwrap());
            r *= 2.0;
        }
        assert!(c.states()[0].coefficients()[0] > 1.0);
        assert!(out.unwrap().correction.iter().all(|v| *v == 0.0));

        let mut loose = ResidualCorrector::new(
            1,
            CorrectorConfig {
                stable_only: false,
                ..cfg
            },
        )
        .unwrap();
        let mut r = 0.01;
        let mut out = None;
        for _ in 0..10 {
            out = Some(loose.step(&[r], &DMatrix::zeros(3, 1)).unwrap());
            r *= 2.0;
        }
        assert!(out.unwrap().correction[(2, 0)].abs() > 1.0);
    }

    #[test]
    fn dimension_checks() {
        let mut c = ResidualCorrector::new(2, CorrectorConfig::default()).unwrap();
        assert!(c.step(&[0.0], &DMatrix::zeros(1, 2)).is_err());
        assert!(c.step(&[0.0, 0.0], &DMatrix::zeros(1, 3)).is_err());
        assert!(c.step(&[0.0, f64::NAN], &DMatrix::zeros(1, 2)).is_err());
        assert!(ResidualCorrector::new(0, CorrectorConfig::default()).is_err());
    }

    #[test]
    fn parameter_counts() {
        let c = ResidualCorrector::new(48, CorrectorConfig::default()).unwrap();
        assert_eq!(c.parameter_count(), 48);
        assert_eq!(c.state_size(), 96);
    }
}
