use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::batch::validate_forgetting;
use super::model::{ArModel, Autoregressive};
use crate::error::{Error, Result};

pub const DEFAULT_FORGETTING: f64 = 0.99;
pub const DEFAULT_INIT_SCALE: f64 = 1e4;

/// Online exponentially weighted least-squares state for one series.
///
/// `inverse_information` is `X_t = (γ^t δ⁻¹ I + Σ_j γ^{t-j} φ_j φ_jᵀ)⁻¹`;
/// the weighted cross term is carried implicitly by `coefficients`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlsState {
    order: usize,
    coefficients: DVector<f64>,
    inverse_information: DMatrix<f64>,
    forgetting: f64,
    init_scale: f64,
    sample_count: u64,
}

/// Fresh state with `α_0 = 0` and `X_0 = δI`.
pub fn rls_init(order: usize, forgetting: f64, init_scale: f64) -> Result<RlsState> {
    if order == 0 {
        return Err(Error::InvalidInput("RLS order must be >= 1".into()));
    }
    validate_forgetting(forgetting)?;
    if !(init_scale.is_finite() && init_scale > 0.0) {
        return Err(Error::InvalidInput(format!("init scale must be > 0, got {init_scale}")));
    }
    Ok(RlsState {
        order,
        coefficients: DVector::zeros(order),
        inverse_information: DMatrix::identity(order, order) * init_scale,
        forgetting,
        init_scale,
        sample_count: 0,
    })
}

/// Functional form of [`RlsState::update`].
pub fn rls_update(state: &RlsState, phi: &[f64], y: f64) -> Result<RlsState> {
    let mut next = state.clone();
    next.update(phi, y)?;
    Ok(next)
}

impl RlsState {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficient_vector(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn inverse_information(&self) -> &DMatrix<f64> {
        &self.inverse_information
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    /// Ridge weight of the prior implied by `X_0 = δI` after all updates so far.
    pub fn implied_ridge(&self) -> f64 {
        self.forgetting.powf(self.sample_count as f64) / self.init_scale
    }

    /// `αᵀφ`.
    pub fn predict_one(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(self.coefficients.iter()).map(|(p, a)| p * a).sum()
    }

    /// One step of the recursion; returns the prior prediction error
    /// `y - φᵀα_{t-1}`. The state is left untouched on error.
    ///
    /// ```text
    /// X_t = (1/γ) X_{t-1} (I - φφᵀX_{t-1} / (φᵀX_{t-1}φ + γ))
    /// α_t = α_{t-1} + X_t φ (y - φᵀα_{t-1})
    /// ```
    pub fn update(&mut self, phi: &[f64], y: f64) -> Result<f64> {
        if phi.len() != self.order {
            return Err(Error::InvalidInput(format!(
                "regressor has {} entries, state order is {}",
                phi.len(),
                self.order
            )));
        }
        if !phi.iter().all(|v| v.is_finite()) || !y.is_finite() {
            return Err(Error::InvalidInput("non-finite RLS sample".into()));
        }
        let phi = DVector::from_column_slice(phi);
        let x_phi = &self.inverse_information * &phi;
        let denom = phi.dot(&x_phi) + self.forgetting;
        if !(denom.is_finite() && denom > 0.0) {
            return Err(Error::Numerical(format!("RLS gain denominator φᵀXφ + γ = {denom}")));
        }
        let error = y - phi.dot(&self.coefficients);

        // X φφᵀ X = (Xφ)(Xφ)ᵀ since X is symmetric.
        let mut next_x = self.inverse_information.clone();
        next_x.ger(-1.0 / denom, &x_phi, &x_phi, 1.0);
        next_x /= self.forgetting;
        let sym = (&next_x + next_x.transpose()) * 0.5;
        // X_t φ equals X_{t-1} φ / denom.
        let gain = x_phi / denom;
        let next_alpha = &self.coefficients + gain * error;

        if !sym.iter().chain(next_alpha.iter()).all(|v| v.is_finite()) {
            return Err(Error::Numerical("RLS update produced non-finite values".into()));
        }
        self.inverse_information = sym;
        self.coefficients = next_alpha;
        self.sample_count += 1;
        Ok(error)
    }

    /// Snapshot of the current coefficients as a fixed AR model.
    pub fn to_model(&self, innovation_variance: f64) -> ArModel {
        ArModel {
            order: self.order,
            coefficients: self.coefficients.iter().copied().collect(),
            innovation_variance,
            mean: 0.0,
        }
    }

    /// Drops all data, returning to the initial state.
    pub fn reset(&mut self) {
        self.coefficients.fill(0.0);
        self.inverse_information = DMatrix::identity(self.order, self.order) * self.init_scale;
        self.sample_count = 0;
    }
}

impl Autoregressive for RlsState {
    fn coefficients(&self) -> &[f64] {
        self.coefficients.as_slice()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ar::batch::fit_ar_batch;
    use crate::ar::series::LaggedSeries;

    #[test]
    fn init_examples() {
        let s = rls_init(1, 0.99, 100.0).unwrap();
        assert_eq!(s.coefficients(), &[0.0]);
        assert_eq!(s.inverse_information()[(0, 0)], 100.0);
        let s = rls_init(3, 0.99, 5.0).unwrap();
        assert_eq!(s.inverse_information(), &(DMatrix::identity(3, 3) * 5.0));
        assert_eq!(s.predict_one(&[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn init_rejects_bad_parameters() {
        assert!(rls_init(0, 0.99, 1.0).is_err());
        assert!(rls_init(1, 0.0, 1.0).is_err());
        assert!(rls_init(1, 1.01, 1.0).is_err());
        assert!(rls_init(1, 0.9, 0.0).is_err());
    }

    #[test]
    fn zero_innovation_keeps_coefficients() {
        let mut s = rls_init(2, 0.95, 10.0).unwrap();
        s.update(&[1.0, 0.5], 2.0).unwrap();
        let alpha = s.coefficient_vector().clone();
        let x = s.inverse_information().clone();
        let phi = [0.3, -0.7];
        let y = s.predict_one(&phi);
        let e = s.update(&phi, y).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(s.coefficient_vector(), &alpha);
        assert_ne!(s.inverse_information(), &x);
    }

    #[test]
    fn two_step_hand_example() {
        let s = rls_init(1, 1.0, 1e6).unwrap();
        let s = rls_update(&s, &[1.0], 0.9).unwrap();
        let s = rls_update(&s, &[0.9], 0.81).unwrap();
        assert!((s.coefficients()[0] - 0.9).abs() < 1e-3);
        // Batch oracle: Σφy / (Σφ² + 1/δ).
        let oracle = (0.9 + 0.9 * 0.81) / (1.0 + 0.81 + 1e-6);
        assert!((s.coefficients()[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn matches_batch_with_implied_prior() {
        let y: Vec<f64> = (0..300)
            .map(|t| ((t as f64) * 0.37).sin() + 0.2 * ((t * t % 17) as f64 / 17.0))
            .collect();
        let series = LaggedSeries::new(y.clone()).unwrap();
        for &gamma in &[0.95, 0.99, 1.0] {
            let mut s = rls_init(2, gamma, 100.0).unwrap();
            for (phi, target) in series.samples(2, 2) {
                s.update(&phi, target).unwrap();
            }
            let batch = fit_ar_batch(&series, 2, gamma, s.implied_ridge()).unwrap();
            for (a, b) in s.coefficients().iter().zip(&batch.coefficients) {
                assert!((a - b).abs() < 1e-9, "γ={gamma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn failed_update_leaves_state() {
        let mut s = rls_init(1, 0.99, 1.0).unwrap();
        let before = s.clone();
        assert!(s.update(&[f64::NAN], 1.0).is_err());
        assert!(s.update(&[1.0, 2.0], 1.0).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn reset_restores_initial_state() {
        let mut s = rls_init(2, 0.9, 3.0).unwrap();
        s.update(&[1.0, 1.0], 1.0).unwrap();
        s.reset();
        assert_eq!(s, rls_init(2, 0.9, 3.0).unwrap());
    }
}
