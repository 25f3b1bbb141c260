//! Choosing bank models for a test sequence with access to its ground truth.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::bank::{fit_channel, BankConfig, ModelBank};
use crate::ar::{ar_predict, ArModel, LaggedSeries};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionLoss {
    Squared,
    Absolute,
}

impl SelectionLoss {
    fn apply(self, e: f64) -> f64 {
        match self {
            Self::Squared => e * e,
            Self::Absolute => e.abs(),
        }
    }
}

/// How candidate models are scored on the test sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Forecast horizon; 1 scores one-step-ahead prediction.
    pub horizon: usize,
    pub loss: SelectionLoss,
    pub stride: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            horizon: 1,
            loss: SelectionLoss::Squared,
            stride: 1,
        }
    }
}

/// Error of every bank individual on every dimension of one test sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateErrors {
    /// Sorted individual ids.
    pub ids: Vec<String>,
    /// `errors[i][d]`: mean loss of individual `i`'s model for dimension `d`.
    pub errors: Vec<Vec<f64>>,
}

impl CandidateErrors {
    /// Error of each individual's full model set (mean over dimensions).
    pub fn person_errors(&self) -> Vec<f64> {
        self.errors
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// The individual with the lowest error; ties go to the smallest id.
    pub fn best_person(&self) -> (&str, f64) {
        let errs = self.person_errors();
        let mut best = 0;
        for (i, e) in errs.iter().enumerate() {
            if *e < errs[best] {
                best = i;
            }
        }
        (&self.ids[best], errs[best])
    }

    /// Best individual per dimension and the resulting mean error.
    pub fn best_per_dimension(&self) -> (Vec<&str>, f64) {
        let dims = self.errors[0].len();
        let mut picks = Vec::with_capacity(dims);
        let mut total = 0.0;
        for d in 0..dims {
            let mut best = 0;
            for i in 1..self.ids.len() {
                if self.errors[i][d] < self.errors[best][d] {
                    best = i;
                }
            }
            picks.push(self.ids[best].as_str());
            total += self.errors[best][d];
        }
        (picks, total / dims as f64)
    }

    /// Expected error when an individual is picked uniformly at random.
    pub fn random_selection_error(&self) -> f64 {
        let errs = self.person_errors();
        errs.iter().sum::<f64>() / errs.len() as f64
    }
}

/// Mean loss of one model set on `test` (`T × D`), per dimension.
///
/// Forecasts start once every model has enough history, so all candidates
/// scored with the same `warmup` see the same anchors.
pub fn model_errors(
    models: &[ArModel],
    test: &DMatrix<f64>,
    warmup: usize,
    config: &SelectionConfig,
) -> Result<Vec<f64>> {
    if models.len() != test.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} models for a sequence with {} dimensions",
            models.len(),
            test.ncols()
        )));
    }
    if config.horizon == 0 || config.stride == 0 {
        return Err(Error::InvalidInput(
            "selection horizon and stride must be positive".into(),
        ));
    }
    let n = config.horizon;
    let t = test.nrows();
    // Anchor a is the last observed index; it needs a + 1 >= warmup frames.
    let first = warmup.max(1) - 1;
    if t < first + 1 + n {
        return Err(Error::InvalidInput(format!(
            "test sequence of {t} frames is too short for warm-up {warmup} and horizon {n}"
        )));
    }
    let anchors: Vec<usize> = (first..t - n).step_by(config.stride).collect();
    let mut out = Vec::with_capacity(models.len());
    for (d, model) in models.iter().enumerate() {
        let col: Vec<f64> = test.column(d).iter().copied().collect();
        let mut total = 0.0;
        for &a in &anchors {
            let pred = ar_predict(model, &col[..=a], n)?;
            total += pred
                .iter()
                .zip(&col[a + 1..=a + n])
                .map(|(p, y)| config.loss.apply(p - y))
                .sum::<f64>();
        }
        out.push(total / (anchors.len() * n) as f64);
    }
    Ok(out)
}

fn bank_warmup(bank: &ModelBank) -> usize {
    bank.individuals.values().flatten().map(|m| m.order).max().unwrap_or(0)
}

/// Scores every individual in the bank on `test`.
pub fn candidate_errors(bank: &ModelBank, test: &DMatrix<f64>, config: &SelectionConfig) -> Result<CandidateErrors> {
    if bank.is_empty() {
        return Err(Error::InvalidInput("model bank is empty".into()));
    }
    if test.ncols() != bank.dims {
        return Err(Error::InvalidInput(format!(
            "test sequence has {} dimensions, bank has {}",
            test.ncols(),
            bank.dims
        )));
    }
    let warmup = bank_warmup(bank);
    let mut ids = Vec::with_capacity(bank.len());
    let mut errors = Vec::with_capacity(bank.len());
    for (id, models) in &bank.individuals {
        ids.push(id.clone());
        errors.push(model_errors(models, test, warmup, config)?);
    }
    Ok(CandidateErrors { ids, errors })
}

/// The individual whose models best forecast `test`.
pub fn oracle_classify(bank: &ModelBank, test: &DMatrix<f64>, config: &SelectionConfig) -> Result<String> {
    Ok(candidate_errors(bank, test, config)?.best_person().0.to_string())
}

/// The best individual for each dimension separately.
pub fn oracle_classify_per_dimension(
    bank: &ModelBank,
    test: &DMatrix<f64>,
    config: &SelectionConfig,
) -> Result<Vec<String>> {
    let errs = candidate_errors(bank, test, config)?;
    let (picks, _) = errs.best_per_dimension();
    Ok(picks.into_iter().map(String::from).collect())
}

/// Keeps individual `id`'s model orders and refits the coefficients on the
/// test sequence itself.
pub fn oracle_refit(bank: &ModelBank, id: &str, test: &DMatrix<f64>, forgetting: f64) -> Result<Vec<ArModel>> {
    let models = bank
        .get(id)
        .ok_or_else(|| Error::InvalidInput(format!("individual {id} is not in the model bank")))?;
    if test.ncols() != models.len() {
        return Err(Error::InvalidInput(format!(
            "test sequence has {} dimensions, bank has {}",
            test.ncols(),
            models.len()
        )));
    }
    let config = BankConfig {
        max_order: 0,
        forgetting,
        fixed_order: None,
    };
    models
        .iter()
        .enumerate()
        .map(|(d, m)| {
            if test.nrows() <= m.order {
                return Err(Error::InvalidInput(format!(
                    "test sequence of {} frames is too short to refit order {}",
                    test.nrows(),
                    m.order
                )));
            }
            let series = LaggedSeries::new(test.column(d).iter().copied().collect())?;
            fit_channel(&series, Some(m.order), &config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personalize::train_bank;
    use crate::pose::Representation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::collections::BTreeMap;

    fn ar1(a: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = a * y[t - 1] + noise.sample(&mut rng);
        }
        y
    }

    fn two_dim(a: f64, b: f64, n: usize, seed: u64) -> DMatrix<f64> {
        let c0 = ar1(a, n, seed);
        let c1 = ar1(b, n, seed + 1000);
        DMatrix::from_fn(n, 2, |t, d| if d == 0 { c0[t] } else { c1[t] })
    }

    fn bank() -> ModelBank {
        let mut g = BTreeMap::new();
        g.insert("p".to_string(), vec![two_dim(0.9, 0.9, 3000, 1)]);
        g.insert("q".to_string(), vec![two_dim(-0.7, -0.7, 3000, 2)]);
        g.insert("r".to_string(), vec![two_dim(0.9, -0.7, 3000, 3)]);
        train_bank(&g, 25.0, Representation::Raw, &BankConfig::default()).unwrap()
    }

    #[test]
    fn identifies_generating_individual() {
        let b = bank();
        let cfg = SelectionConfig::default();
        assert_eq!(oracle_classify(&b, &two_dim(0.9, 0.9, 1000, 50), &cfg).unwrap(), "p");
        assert_eq!(oracle_classify(&b, &two_dim(-0.7, -0.7, 1000, 51), &cfg).unwrap(), "q");
    }

    #[test]
    fn per_dimension_mixes_individuals() {
        let b = bank();
        let test = two_dim(-0.7, 0.9, 1000, 60);
        let picks = oracle_classify_per_dimension(&b, &test, &SelectionConfig::default()).unwrap();
        assert_eq!(picks[0], "q");
        assert_eq!(picks[1], "p");
    }

    #[test]
    fn ordering_of_oracles() {
        let b = bank();
        let test = two_dim(-0.7, 0.9, 800, 70);
        let errs = candidate_errors(
            &b,
            &test,
            &SelectionConfig {
                horizon: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let (_, person) = errs.best_person();
        let (_, per_dim) = errs.best_per_dimension();
        assert!(per_dim <= person);
        assert!(person <= errs.random_selection_error());
    }

    #[test]
    fn identical_candidates_tie_to_smallest_id() {
        let data = two_dim(0.5, 0.5, 500, 9);
        let mut g = BTreeMap::new();
        for id in ["zeta", "beta", "alpha"] {
            g.insert(id.to_string(), vec![data.clone()]);
        }
        let b = train_bank(&g, 25.0, Representation::Raw, &BankConfig::default()).unwrap();
        assert_eq!(
            oracle_classify(&b, &data, &SelectionConfig::default()).unwrap(),
            "alpha"
        );
    }

    #[test]
    fn refit_on_training_data_reproduces_model() {
        let data = two_dim(0.8, -0.3, 2000, 11);
        let mut g = BTreeMap::new();
        g.insert("s".to_string(), vec![data.clone()]);
        let b = train_bank(&g, 25.0, Representation::Raw, &BankConfig::default()).unwrap();
        let refit = oracle_refit(&b, "s", &data, 1.0).unwrap();
        for (m, r) in b.get("s").unwrap().iter().zip(&refit) {
            assert_eq!(m.order, r.order);
            for (x, y) in m.coefficients.iter().zip(&r.coefficients) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn refit_rejects_short_sequence() {
        let b = bank();
        assert!(oracle_refit(&b, "p", &DMatrix::zeros(1, 2), 1.0).is_err());
        assert!(oracle_refit(&b, "missing", &DMatrix::zeros(100, 2), 1.0).is_err());
    }

    #[test]
    fn absolute_loss_is_supported() {
        let b = bank();
        let cfg = SelectionConfig {
            loss: SelectionLoss::Absolute,
            horizon: 2,
            stride: 3,
        };
        assert_eq!(oracle_classify(&b, &two_dim(0.9, 0.9, 600, 80), &cfg).unwrap(), "p");
    }
}
