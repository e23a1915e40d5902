//! `ln(x + c)` transform used by the log-space stacking variants.

use serde::{Deserialize, Serialize};

use super::ForecastMatrix;
use crate::scalar::Scalar;

/// Shift `c` is 1 when the fitting scope contains a zero, 0 otherwise.
/// Negative inputs are clamped to zero before the log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTransform<T> {
    pub c: T,
}

impl<T: Scalar> LogTransform<T> {
    pub fn fit<'a, I>(scope: I) -> Self
    where
        I: IntoIterator<Item = &'a T>,
    {
        let has_zero = scope.into_iter().any(|&v| v <= T::zero());
        Self {
            c: if has_zero { T::one() } else { T::zero() },
        }
    }

    pub fn forward(&self, x: T) -> T {
        let v = x.max(T::zero()) + self.c;
        // Guards the c = 0 case when a test-time value hits zero.
        v.max(T::min_positive_value()).ln()
    }

    pub fn inverse(&self, z: T) -> T {
        (z.exp() - self.c).max(T::zero())
    }
}

/// Fits the transform on the matrix forecasts and actuals together and
/// returns the transformed matrix.
pub fn log_pipeline_forward<T: Scalar>(fm: &ForecastMatrix<T>) -> (ForecastMatrix<T>, LogTransform<T>) {
    let scope = fm
        .values
        .iter()
        .flatten()
        .chain(fm.actuals.iter().flatten());
    let tr = LogTransform::fit(scope);
    (apply(fm, &tr), tr)
}

pub(crate) fn apply<T: Scalar>(fm: &ForecastMatrix<T>, tr: &LogTransform<T>) -> ForecastMatrix<T> {
    ForecastMatrix {
        models: fm.models.clone(),
        series_ids: fm.series_ids.clone(),
        horizon: fm.horizon,
        values: fm
            .values
            .iter()
            .map(|r| r.iter().map(|&v| tr.forward(v)).collect())
            .collect(),
        actuals: fm
            .actuals
            .as_ref()
            .map(|a| a.iter().map(|&v| tr.forward(v)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shift_only_with_zeros() {
        assert_eq!(LogTransform::fit(&[1.0, 2.0]).c, 0.0);
        assert_eq!(LogTransform::fit(&[1.0, 0.0]).c, 1.0);
    }

    #[test]
    fn zero_maps_to_zero_with_shift() {
        let tr = LogTransform { c: 1.0 };
        assert_eq!(tr.forward(0.0), 0.0);
        assert_eq!(tr.forward(-3.0), 0.0);
        assert_eq!(tr.inverse(0.0), 0.0);
    }

    #[test]
    fn f32_round_trip() {
        let tr = LogTransform { c: 1.0f32 };
        assert!((tr.inverse(tr.forward(12.5f32)) - 12.5).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn round_trip(x in 0.0f64..1e6, with_shift in any::<bool>()) {
            let tr = LogTransform { c: if with_shift { 1.0 } else { 0.0 } };
            prop_assume!(with_shift || x > 1e-300);
            let back = tr.inverse(tr.forward(x));
            prop_assert!((back - x).abs() <= 1e-9 * x.max(1.0));
        }
    }
}
