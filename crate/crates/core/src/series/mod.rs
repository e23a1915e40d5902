//! Time-series representation, weekly aggregation, imputation and splitting.

mod boxcox;
mod fourier;
pub mod io;

pub use boxcox::{boxcox, boxcox_lambda, inv_boxcox, BOXCOX_LAMBDA_GRID};
pub use fourier::{fourier_terms, FourierSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integer seasonal period of weekly data.
pub const WEEKLY_PERIOD: usize = 52;
/// Mean number of weeks per year.
pub const WEEKLY_PERIOD_REAL: f64 = 52.18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    TenMinute,
    HalfHourly,
    Hourly,
    Daily,
    Weekly,
}

impl Granularity {
    /// Number of raw observations that make up one week.
    pub fn block_size(self) -> usize {
        match self {
            Granularity::TenMinute => 1008,
            Granularity::HalfHourly => 336,
            Granularity::Hourly => 168,
            Granularity::Daily => 7,
            Granularity::Weekly => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::TenMinute => "ten-minute",
            Granularity::HalfHourly => "half-hourly",
            Granularity::Hourly => "hourly",
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "ten-minute" | "10-minute" | "10min" => Ok(Granularity::TenMinute),
            "half-hourly" | "30min" => Ok(Granularity::HalfHourly),
            "hourly" => Ok(Granularity::Hourly),
            "daily" => Ok(Granularity::Daily),
            "weekly" => Ok(Granularity::Weekly),
            other => Err(Error::InvalidInput(format!("unknown granularity `{other}`"))),
        }
    }
}

/// A fully observed series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub id: String,
    pub values: Vec<T>,
    pub start_timestamp: Option<String>,
    pub granularity: Granularity,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(id: impl Into<String>, values: Vec<T>, granularity: Granularity) -> Result<Self> {
        let id = id.into();
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("series `{id}` is empty")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "series `{id}` has a non-finite value at position {pos}"
            )));
        }
        Ok(Self {
            id,
            values,
            start_timestamp: None,
            granularity,
        })
    }

    pub fn with_start(mut self, start: Option<String>) -> Self {
        self.start_timestamp = start;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A series as read from disk, with explicit missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries<T> {
    pub id: String,
    pub values: Vec<Option<T>>,
    pub start_timestamp: Option<String>,
    pub granularity: Granularity,
}

impl<T: Scalar> RawSeries<T> {
    pub fn has_missing(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }

    /// Converts to a [`TimeSeries`]; fails if any entry is missing.
    pub fn into_complete(self) -> Result<TimeSeries<T>> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::Data(format!(
                        "series `{}` has a missing value at position {i}; configure an imputation policy",
                        self.id
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSeries::new(self.id, values, self.granularity)?.with_start(self.start_timestamp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputePolicy {
    Median,
    Zero,
}

impl std::str::FromStr for ImputePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "median" => Ok(ImputePolicy::Median),
            "zero" => Ok(ImputePolicy::Zero),
            other => Err(Error::InvalidInput(format!("unknown imputation policy `{other}`"))),
        }
    }
}

/// Fills missing entries with the series median of observed values, or with zero.
pub fn impute_missing<T: Scalar>(raw: &RawSeries<T>, policy: ImputePolicy) -> Result<TimeSeries<T>> {
    let observed: Vec<T> = raw.values.iter().flatten().copied().collect();
    if observed.is_empty() {
        return Err(Error::AllMissing(raw.id.clone()));
    }
    let fill = match policy {
        ImputePolicy::Zero => T::zero(),
        ImputePolicy::Median => median(&observed),
    };
    let values = raw.values.iter().map(|v| v.unwrap_or(fill)).collect();
    Ok(TimeSeries::new(raw.id.clone(), values, raw.granularity)?
        .with_start(raw.start_timestamp.clone()))
}

/// Block-sums a higher-frequency series into weeks, anchored at the first
/// observation. A trailing partial block is dropped.
pub fn aggregate_to_weekly<T: Scalar>(raw: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    if raw.granularity == Granularity::Weekly {
        return Err(Error::InvalidInput(format!(
            "series `{}` is already weekly",
            raw.id
        )));
    }
    aggregate_blocks(raw, raw.granularity.block_size())
}

/// Block-sum aggregation with an explicit block size.
pub fn aggregate_blocks<T: Scalar>(raw: &TimeSeries<T>, block: usize) -> Result<TimeSeries<T>> {
    if block == 0 {
        return Err(Error::InvalidInput("block size must be positive".into()));
    }
    if raw.values.len() < block {
        return Err(Error::TooShortToAggregate {
            needed: block,
            got: raw.values.len(),
        });
    }
    let values = raw
        .values
        .chunks_exact(block)
        .map(|c| c.iter().copied().sum())
        .collect();
    Ok(TimeSeries {
        id: raw.id.clone(),
        values,
        start_timestamp: raw.start_timestamp.clone(),
        granularity: Granularity::Weekly,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSeries<T> {
    pub training: Vec<T>,
    pub validation: Vec<T>,
}

/// Holds out the final `h` values.
pub fn split_last_h<T: Clone>(values: &[T], h: usize) -> Result<SplitSeries<T>> {
    if values.len() <= h {
        return Err(Error::SeriesTooShort {
            what: "train/validation split",
            needed: h + 1,
            got: values.len(),
        });
    }
    let cut = values.len() - h;
    Ok(SplitSeries {
        training: values[..cut].to_vec(),
        validation: values[cut..].to_vec(),
    })
}

/// A named collection of weekly series sharing one forecast horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyDataset<T> {
    pub name: String,
    pub series: Vec<TimeSeries<T>>,
    pub horizon: usize,
    pub seasonal_period_integer: usize,
    pub seasonal_period_real: f64,
}

impl<T: Scalar> WeeklyDataset<T> {
    pub fn new(name: impl Into<String>, series: Vec<TimeSeries<T>>, horizon: usize) -> Result<Self> {
        let name = name.into();
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        if let Some(expected) = table_horizon(&name) {
            if expected != horizon {
                return Err(Error::InvalidInput(format!(
                    "dataset `{name}` uses horizon {expected}, got {horizon}"
                )));
            }
        }
        for s in &series {
            if s.granularity != Granularity::Weekly {
                return Err(Error::InvalidInput(format!(
                    "series `{}` is not weekly",
                    s.id
                )));
            }
            if s.len() < horizon + 1 {
                return Err(Error::SeriesTooShort {
                    what: "weekly dataset",
                    needed: horizon + 1,
                    got: s.len(),
                });
            }
        }
        Ok(Self {
            name,
            series,
            horizon,
            seasonal_period_integer: WEEKLY_PERIOD,
            seasonal_period_real: WEEKLY_PERIOD_REAL,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn min_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).min().unwrap_or(0)
    }

    /// Splits every series into its training part and the final `horizon` values.
    pub fn split(&self) -> Result<Vec<SplitSeries<T>>> {
        self.series
            .iter()
            .map(|s| split_last_h(&s.values, self.horizon))
            .collect()
    }

    /// The dataset with the final `horizon` values of every series removed.
    pub fn drop_last_horizon(&self) -> Result<Self> {
        let series = self
            .series
            .iter()
            .map(|s| {
                let sp = split_last_h(&s.values, self.horizon)?;
                Ok(TimeSeries {
                    values: sp.training,
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new_unchecked(self.name.clone(), series, self.horizon)
    }

    /// Like [`WeeklyDataset::new`] but without the named-dataset horizon check
    /// and with the length check relaxed to one point.
    pub fn new_unchecked(name: String, series: Vec<TimeSeries<T>>, horizon: usize) -> Result<Self> {
        if series.iter().any(|s| s.is_empty()) {
            return Err(Error::InvalidInput("empty series in dataset".into()));
        }
        Ok(Self {
            name,
            series,
            horizon,
            seasonal_period_integer: WEEKLY_PERIOD,
            seasonal_period_real: WEEKLY_PERIOD_REAL,
        })
    }
}

/// Forecast horizons of the six reference weekly datasets.
pub fn table_horizon(name: &str) -> Option<usize> {
    match canonical_dataset_name(name)? {
        "M4" => Some(13),
        "NN5" | "Kaggle" | "Ausgrid" | "Traffic" => Some(8),
        "Solar" => Some(5),
        _ => None,
    }
}

/// Maps user spellings of the reference dataset names onto one canonical form.
pub fn canonical_dataset_name(name: &str) -> Option<&'static str> {
    let lower = name.trim().to_ascii_lowercase();
    let key = lower.trim_end_matches("_weekly").trim_end_matches("-weekly");
    match key {
        "m4" => Some("M4"),
        "nn5" => Some("NN5"),
        "kaggle" | "web_traffic" | "web-traffic" | "kaggle_web_traffic" => Some("Kaggle"),
        "ausgrid" => Some("Ausgrid"),
        "traffic" | "sf_traffic" => Some("Traffic"),
        "solar" => Some("Solar"),
        _ => None,
    }
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub fn median<T: Scalar>(values: &[T]) -> T {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

pub fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn daily(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new("s", values, Granularity::Daily).unwrap()
    }

    #[test]
    fn constant_daily_blocks() {
        let w = aggregate_to_weekly(&daily(vec![1.0; 14])).unwrap();
        assert_eq!(w.values, vec![7.0, 7.0]);
        assert_eq!(w.granularity, Granularity::Weekly);
    }

    #[test]
    fn trailing_partial_block_dropped() {
        let w = aggregate_to_weekly(&daily((1..=8).map(f64::from).collect())).unwrap();
        assert_eq!(w.values, vec![28.0]);
    }

    #[test]
    fn nn5_length() {
        let w = aggregate_to_weekly(&daily(vec![1.0; 791])).unwrap();
        assert_eq!(w.len(), 113);
        let sp = split_last_h(&w.values, 8).unwrap();
        assert_eq!((sp.training.len(), sp.validation.len()), (105, 8));
        let sp = split_last_h(&sp.training, 8).unwrap();
        assert_eq!(sp.training.len(), 97);
    }

    #[test]
    fn too_short_to_aggregate() {
        let err = aggregate_to_weekly(&daily(vec![1.0; 6])).unwrap_err();
        assert!(err.to_string().contains("series too short to aggregate"));
    }

    #[test]
    fn block_sizes() {
        assert_eq!(Granularity::Hourly.block_size(), 168);
        assert_eq!(Granularity::HalfHourly.block_size(), 336);
        assert_eq!(Granularity::TenMinute.block_size(), 1008);
    }

    fn raw(values: Vec<Option<f64>>) -> RawSeries<f64> {
        RawSeries {
            id: "r".into(),
            values,
            start_timestamp: None,
            granularity: Granularity::Daily,
        }
    }

    #[test]
    fn impute_examples() {
        let m = impute_missing(&raw(vec![Some(1.0), None, Some(3.0)]), ImputePolicy::Median).unwrap();
        assert_eq!(m.values, vec![1.0, 2.0, 3.0]);
        let z = impute_missing(&raw(vec![None, Some(5.0)]), ImputePolicy::Zero).unwrap();
        assert_eq!(z.values, vec![0.0, 5.0]);
        let c = impute_missing(
            &raw(vec![Some(4.0), Some(4.0), None, Some(4.0)]),
            ImputePolicy::Median,
        )
        .unwrap();
        assert_eq!(c.values, vec![4.0; 4]);
        assert!(matches!(
            impute_missing(&raw(vec![None, None]), ImputePolicy::Zero),
            Err(Error::AllMissing(_))
        ));
    }

    #[test]
    fn split_examples() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let sp = split_last_h(&v, 3).unwrap();
        assert_eq!(sp.training, (1..=7).map(f64::from).collect::<Vec<_>>());
        assert_eq!(sp.validation, vec![8.0, 9.0, 10.0]);
        assert!(split_last_h(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn dataset_horizon_check() {
        let s = TimeSeries::new("a", vec![1.0; 20], Granularity::Weekly).unwrap();
        assert!(WeeklyDataset::new("NN5", vec![s.clone()], 13).is_err());
        assert!(WeeklyDataset::new("nn5", vec![s.clone()], 8).is_ok());
        assert!(WeeklyDataset::new("custom", vec![s], 3).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(TimeSeries::new("x", vec![1.0, f64::NAN], Granularity::Daily).is_err());
        assert!(TimeSeries::<f64>::new("x", vec![], Granularity::Daily).is_err());
    }

    #[test]
    fn aggregation_works_in_f32() {
        let s = TimeSeries::new("f", vec![0.5f32; 21], Granularity::Daily).unwrap();
        assert_eq!(aggregate_to_weekly(&s).unwrap().values, vec![3.5f32; 3]);
    }

    proptest! {
        #[test]
        fn aggregation_preserves_totals(values in prop::collection::vec(0.0f64..1e4, 7..200)) {
            let s = daily(values.clone());
            let w = aggregate_to_weekly(&s).unwrap();
            let complete = (values.len() / 7) * 7;
            let raw_total: f64 = values[..complete].iter().sum();
            let weekly_total: f64 = w.values.iter().sum();
            prop_assert!((raw_total - weekly_total).abs() <= 1e-9 * raw_total.abs().max(1.0));
            prop_assert!(w.values.iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn split_concat_identity(values in prop::collection::vec(-1e3f64..1e3, 2..60), h in 1usize..10) {
            prop_assume!(values.len() > h);
            let sp = split_last_h(&values, h).unwrap();
            let mut joined = sp.training.clone();
            joined.extend(&sp.validation);
            prop_assert_eq!(joined, values);
            prop_assert_eq!(sp.validation.len(), h);
        }

        #[test]
        fn imputation_idempotent(values in prop::collection::vec(prop::option::of(0.0f64..100.0), 1..40)) {
            prop_assume!(values.iter().any(Option::is_some));
            let r = raw(values);
            for policy in [ImputePolicy::Median, ImputePolicy::Zero] {
                let once = impute_missing(&r, policy).unwrap();
                let again = impute_missing(&raw(once.values.iter().copied().map(Some).collect()), policy).unwrap();
                prop_assert_eq!(once.values, again.values);
            }
        }
    }
}
