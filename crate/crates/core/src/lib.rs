//! Weekly time-series forecasting: four base forecasters (Theta, TBATS,
//! DHR-ARIMA and a global LSTM) combined by non-negative lasso stacking,
//! with FFORMA-style and averaging baselines and an evaluation harness.
//!
//! The numerical kernels of [`series`], [`eval::metrics`] and the lasso and
//! averaging combiners are generic over [`Scalar`] (`f32` or `f64`); the
//! model fitting code works in `f64`. Aliases for the common `f64`
//! instantiations live at the crate root.

pub mod combine;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod models;
pub mod optim;
pub mod rnn;
pub mod scalar;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use models::ProviderId;
pub use scalar::Scalar;

pub type Series = series::TimeSeries<f64>;
pub type Dataset = series::WeeklyDataset<f64>;
pub type Matrix = combine::ForecastMatrix<f64>;
pub type Lasso = combine::LassoModel<f64>;
pub type Transform = combine::LogTransform<f64>;

pub type SeriesF32 = series::TimeSeries<f32>;
pub type MatrixF32 = combine::ForecastMatrix<f32>;
pub type LassoF32 = combine::LassoModel<f32>;

/// Order-preserving parallel map on the current rayon pool.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}
