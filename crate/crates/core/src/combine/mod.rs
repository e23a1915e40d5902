//! Forecast combination: averaging, non-negative lasso stacking and the
//! feature-based boosted meta-learner.

pub mod features;
pub mod fforma;
pub mod gbt;
pub mod lasso;
pub mod stack;
pub mod transform;

pub use features::{extract_features, FeatureVector, FEATURE_NAMES};
pub use fforma::{fforma_predict, fforma_train, FformaModel, FformaParams};
pub use lasso::{kkt_residual, lasso_objective, nnlasso_cv, nnlasso_fit, LassoCv, LassoModel};
pub use stack::{lasso_stack_predict, lasso_stack_train, LassoStack, LassoVariant};
pub use transform::{log_pipeline_forward, LogTransform};

use crate::error::{Error, Result};
use crate::models::cache::ForecastTable;
use crate::models::ProviderId;
use crate::scalar::Scalar;

/// Point forecasts indexed by `(series, step)` rows and model columns.
///
/// Row `s * horizon + j` holds step `j + 1` of series `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMatrix<T> {
    pub models: Vec<ProviderId>,
    pub series_ids: Vec<String>,
    pub horizon: usize,
    /// `values[row][model]`.
    pub values: Vec<Vec<T>>,
    /// Known targets per row, when available.
    pub actuals: Option<Vec<T>>,
}

impl<T: Scalar> ForecastMatrix<T> {
    pub fn new(
        models: Vec<ProviderId>,
        series_ids: Vec<String>,
        horizon: usize,
        values: Vec<Vec<T>>,
        actuals: Option<Vec<T>>,
    ) -> Result<Self> {
        let rows = series_ids.len() * horizon;
        if values.len() != rows {
            return Err(Error::InvalidInput(format!(
                "forecast matrix has {} rows, expected {rows}",
                values.len()
            )));
        }
        if values.iter().any(|r| r.len() != models.len()) {
            return Err(Error::InvalidInput("forecast matrix is not rectangular".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite forecast".into()));
        }
        if let Some(a) = &actuals {
            if a.len() != rows {
                return Err(Error::InvalidInput("actuals length mismatch".into()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if !series_ids.iter().all(|id| seen.insert(id)) {
            return Err(Error::InvalidInput("duplicate series id in forecast matrix".into()));
        }
        Ok(Self {
            models,
            series_ids,
            horizon,
            values,
            actuals,
        })
    }

    /// Builds a matrix from per-provider forecast tables, in `series_ids` order.
    pub fn from_tables(
        tables: &[(ProviderId, &ForecastTable)],
        series_ids: &[String],
        actuals: Option<&[Vec<T>]>,
    ) -> Result<Self> {
        let horizon = tables
            .first()
            .map(|(_, t)| t.horizon)
            .ok_or_else(|| Error::InvalidInput("no forecast tables".into()))?;
        let mut values = Vec::with_capacity(series_ids.len() * horizon);
        for id in series_ids {
            let cols = tables
                .iter()
                .map(|(p, t)| {
                    if t.horizon != horizon {
                        return Err(Error::Data(format!("{p} forecasts use a different horizon")));
                    }
                    t.get(id)
                        .ok_or_else(|| Error::Data(format!("{p} has no forecasts for series `{id}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            for j in 0..horizon {
                values.push(cols.iter().map(|c| T::lit(c[j])).collect());
            }
        }
        let actuals = actuals.map(|a| a.iter().flatten().copied().collect());
        Self::new(
            tables.iter().map(|(p, _)| *p).collect(),
            series_ids.to_vec(),
            horizon,
            values,
            actuals,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_series(&self) -> usize {
        self.series_ids.len()
    }

    pub fn column(&self, m: usize) -> Vec<T> {
        self.values.iter().map(|r| r[m]).collect()
    }

    /// Forecasts of model `m` for series `s`.
    pub fn series_forecasts(&self, s: usize, m: usize) -> Vec<T> {
        self.values[s * self.horizon..(s + 1) * self.horizon]
            .iter()
            .map(|r| r[m])
            .collect()
    }

    /// Reorders series by `perm` (`new[i] = old[perm[i]]`).
    pub fn permute_series(&self, perm: &[usize]) -> Self {
        let h = self.horizon;
        let values = perm
            .iter()
            .flat_map(|&s| self.values[s * h..(s + 1) * h].iter().cloned())
            .collect();
        let actuals = self
            .actuals
            .as_ref()
            .map(|a| perm.iter().flat_map(|&s| a[s * h..(s + 1) * h].iter().copied()).collect());
        Self {
            models: self.models.clone(),
            series_ids: perm.iter().map(|&s| self.series_ids[s].clone()).collect(),
            horizon: h,
            values,
            actuals,
        }
    }
}

/// Equal-weight mean across models, per row.
pub fn average_combine<T: Scalar>(fm: &ForecastMatrix<T>) -> Vec<T> {
    let k = T::from_usize_lossy(fm.models.len());
    fm.values
        .iter()
        .map(|row| row.iter().copied().sum::<T>() / k)
        .collect()
}

/// Splits a flat per-row vector back into per-series forecast vectors.
pub fn rows_to_series<T: Clone>(flat: &[T], horizon: usize) -> Vec<Vec<T>> {
    flat.chunks(horizon).map(<[T]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<Vec<f64>>, horizon: usize) -> ForecastMatrix<f64> {
        let n = values.len() / horizon;
        ForecastMatrix::new(
            ProviderId::ALL.to_vec(),
            (0..n).map(|i| format!("s{i}")).collect(),
            horizon,
            values,
            None,
        )
        .unwrap()
    }

    #[test]
    fn average_example() {
        let fm = matrix(vec![vec![4.0, 6.0, 8.0, 10.0]], 1);
        assert_eq!(average_combine(&fm), vec![7.0]);
    }

    #[test]
    fn identical_columns_identity() {
        let fm = matrix(vec![vec![3.5; 4], vec![1.25; 4]], 1);
        assert_eq!(average_combine(&fm), vec![3.5, 1.25]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ForecastMatrix::new(ProviderId::ALL.to_vec(), vec!["a".into()], 2, vec![vec![1.0; 4]], None).is_err());
        assert!(ForecastMatrix::new(
            ProviderId::ALL.to_vec(),
            vec!["a".into(), "a".into()],
            1,
            vec![vec![1.0; 4], vec![1.0; 4]],
            None
        )
        .is_err());
        assert!(ForecastMatrix::new(ProviderId::ALL.to_vec(), vec!["a".into()], 1, vec![vec![1.0, f64::NAN, 1.0, 1.0]], None).is_err());
    }

    #[test]
    fn average_in_f32() {
        let fm = ForecastMatrix::new(ProviderId::ALL.to_vec(), vec!["a".into()], 1, vec![vec![1.0f32, 2.0, 3.0, 4.0]], None).unwrap();
        assert_eq!(average_combine(&fm), vec![2.5f32]);
    }

    proptest! {
        #[test]
        fn average_within_row_range(rows in prop::collection::vec(prop::collection::vec(0.0f64..1e4, 4), 1..20)) {
            let fm = matrix(rows.clone(), 1);
            for (avg, row) in average_combine(&fm).iter().zip(&rows) {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*avg >= lo - 1e-9 && *avg <= hi + 1e-9);
            }
        }

        #[test]
        fn average_commutes_with_series_permutation(rows in prop::collection::vec(prop::collection::vec(0.0f64..1e4, 4), 6)) {
            let fm = matrix(rows, 2);
            let perm = [2usize, 0, 1];
            let a = rows_to_series(&average_combine(&fm), 2);
            let b = rows_to_series(&average_combine(&fm.permute_series(&perm)), 2);
            for (i, &p) in perm.iter().enumerate() {
                prop_assert_eq!(&b[i], &a[p]);
            }
        }
    }
}
