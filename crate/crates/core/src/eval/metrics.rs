//! Forecast accuracy measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::canonical_dataset_name;

/// Default smoothing constant of the Suilin sMAPE variant.
pub const SUILIN_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SmapeVariant {
    #[default]
    Standard,
    /// Denominator `max(|Y| + |F| + ε, 0.5 + ε)`, for data containing zeros.
    Suilin,
}

impl std::str::FromStr for SmapeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(SmapeVariant::Standard),
            "suilin" => Ok(SmapeVariant::Suilin),
            other => Err(Error::InvalidInput(format!("unknown sMAPE variant `{other}`"))),
        }
    }
}

/// Everything needed to score one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationContext {
    /// Seasonal lag of the MASE scaling benchmark.
    pub seasonal_lag: usize,
    pub epsilon: f64,
    pub smape_variant: SmapeVariant,
}

impl EvaluationContext {
    pub fn new(seasonal_lag: usize, smape_variant: SmapeVariant) -> Self {
        Self {
            seasonal_lag,
            epsilon: SUILIN_EPSILON,
            smape_variant,
        }
    }
}

fn check_lengths<T>(f: &[T], y: &[T]) -> Result<()> {
    if f.len() != y.len() || f.is_empty() {
        return Err(Error::InvalidInput(format!(
            "forecast/actual length mismatch: {} vs {}",
            f.len(),
            y.len()
        )));
    }
    Ok(())
}

/// sMAPE in percent with the default Suilin ε.
pub fn smape<T: Scalar>(f: &[T], y: &[T], variant: SmapeVariant) -> Result<T> {
    smape_with_epsilon(f, y, variant, T::lit(SUILIN_EPSILON))
}

pub fn smape_with_epsilon<T: Scalar>(f: &[T], y: &[T], variant: SmapeVariant, epsilon: T) -> Result<T> {
    check_lengths(f, y)?;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for (&fk, &yk) in f.iter().zip(y) {
        let num = (fk - yk).abs();
        let denom = match variant {
            SmapeVariant::Standard => {
                let d = yk.abs() + fk.abs();
                if d == T::zero() {
                    return Err(Error::UseSuilinVariant);
                }
                d
            }
            SmapeVariant::Suilin => (yk.abs() + fk.abs() + epsilon).max(half + epsilon),
        };
        total += two * num / denom;
    }
    Ok(T::lit(100.0) * total / T::from_usize_lossy(f.len()))
}

/// Mean absolute scaled error against the in-sample lag-`s` naive benchmark.
pub fn mase<T: Scalar>(f: &[T], y: &[T], training: &[T], s: usize) -> Result<T> {
    check_lengths(f, y)?;
    let m = training.len();
    if s == 0 || m <= s {
        return Err(Error::InvalidInput(format!(
            "MASE needs more than {s} training points, got {m}"
        )));
    }
    let num: T = f.iter().zip(y).map(|(&a, &b)| (a - b).abs()).sum();
    let naive: T = (s..m).map(|k| (training[k] - training[k - s]).abs()).sum();
    let scale = T::from_usize_lossy(f.len()) / T::from_usize_lossy(m - s) * naive;
    if scale == T::zero() {
        return Err(Error::UndefinedMase);
    }
    Ok(num / scale)
}

/// MASE benchmark lag for a dataset: the naive lag 1 for M4 and for any
/// dataset that is non-seasonal or shorter than one cycle plus one point,
/// the seasonal naive lag 52 otherwise.
pub fn select_mase_benchmark(dataset: &str, seasonal: bool, min_training_len: usize) -> usize {
    match canonical_dataset_name(dataset) {
        Some("M4") => 1,
        _ if seasonal && min_training_len > crate::series::WEEKLY_PERIOD => {
            crate::series::WEEKLY_PERIOD
        }
        _ => 1,
    }
}

/// Mean and median of per-series errors.
pub fn aggregate<T: Scalar>(errors: &[T]) -> Result<(T, T)> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("no errors to aggregate".into()));
    }
    Ok((crate::series::mean(errors), crate::series::median(errors)))
}
