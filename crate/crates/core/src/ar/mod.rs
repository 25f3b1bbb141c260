//! Per-dimension autoregressive models: closed-form weighted fits, the
//! recursive (RLS) estimator, BIC order selection and multi-step prediction.
//!
//! Predictions use `ŷ_t = αᵀφ_t` with `φ_t = (y_{t-1}, …, y_{t-P})`.

mod batch;
mod bic;
mod model;
mod predict;
mod rls;
mod series;

pub use batch::{fit_ar_batch, fit_ar_from, WeightedNormalEquations, DEFAULT_RIDGE};
pub use bic::{bic_order_select, BicSelection};
pub use model::{is_stable, ArModel, Autoregressive};
pub use predict::ar_predict;
pub use rls::{rls_init, rls_update, RlsState, DEFAULT_FORGETTING, DEFAULT_INIT_SCALE};
pub use series::{unwrap_angles, LaggedSeries};
