//! Online personalization of human pose forecasts.
//!
//! Any base ("trend") forecaster can be wrapped by a bank of per-dimension
//! autoregressive models estimated with exponentially weighted recursive
//! least squares. The crate bundles the pieces needed to evaluate this on
//! per-individual streams:
//!
//! * [`pose`]: quaternion / exponential-map / Euler algebra, skeletons,
//!   forward kinematics and pose sequences.
//! * [`ar`]: batch and recursive AR estimation, BIC order selection and
//!   multi-step prediction.
//! * [`forecast`]: the predictor contract, baselines, external prediction
//!   files and the residual corrector.
//! * [`metrics`]: MPJE, MEA, the per-individual aggregate and error curves.
//! * [`personalize`]: per-individual model banks, oracle selection and a
//!   linear max-margin classifier.
//! * [`bench`]: ingestion, the windowed evaluation protocol, synthetic data
//!   and reports.

pub mod ar;
pub mod bench;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod personalize;
pub mod pose;

pub use error::{Error, Result};
