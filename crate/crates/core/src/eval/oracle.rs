//! Ex-post best-model selection per series, over the full base set and every
//! leave-one-out subset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{mean, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSubset {
    /// Member names joined with `_`, e.g. `TBATS_DHR-ARIMA_Theta`.
    pub name: String,
    pub members: Vec<usize>,
    pub per_series: Vec<f64>,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStudyResult {
    /// Leave-one-out subsets first, the full set last.
    pub subsets: Vec<OracleSubset>,
}

impl OracleStudyResult {
    pub fn full(&self) -> &OracleSubset {
        self.subsets.last().expect("full set present")
    }

    /// Whether the full-set oracle is no worse than every subset on every
    /// series and on both aggregates.
    pub fn superset_dominates(&self) -> bool {
        let full = self.full();
        self.subsets.iter().all(|s| {
            full.mean <= s.mean
                && full.median <= s.median
                && full.per_series.iter().zip(&s.per_series).all(|(a, b)| a <= b)
        })
    }
}

/// `errors[series][model]` with `names[model]`.
pub fn oracle_study(errors: &[Vec<f64>], names: &[&str]) -> Result<OracleStudyResult> {
    let m = names.len();
    if errors.is_empty() || m < 2 {
        return Err(Error::InvalidInput("oracle study needs series and at least two models".into()));
    }
    if errors.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput("ragged error matrix".into()));
    }
    let mut member_sets: Vec<Vec<usize>> = (0..m)
        .rev()
        .map(|drop| (0..m).filter(|&j| j != drop).collect())
        .collect();
    member_sets.push((0..m).collect());

    let subsets = member_sets
        .into_iter()
        .map(|members| {
            let per_series: Vec<f64> = errors
                .iter()
                .map(|row| members.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min))
                .collect();
            OracleSubset {
                name: members.iter().map(|&j| names[j]).collect::<Vec<_>>().join("_"),
                mean: mean(&per_series),
                median: median(&per_series),
                members,
                per_series,
            }
        })
        .collect();
    Ok(OracleStudyResult { subsets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NAMES: [&str; 4] = ["TBATS", "DHR-ARIMA", "Theta", "RNN"];

    #[test]
    fn per_series_is_row_min() {
        let errors = vec![vec![3.0, 1.0, 2.0, 5.0], vec![4.0, 6.0, 0.5, 2.0]];
        let r = oracle_study(&errors, &NAMES).unwrap();
        assert_eq!(r.full().per_series, vec![1.0, 0.5]);
        assert_eq!(r.full().name, "TBATS_DHR-ARIMA_Theta_RNN");
        assert_eq!(r.subsets.len(), 5);
        assert_eq!(r.subsets[0].name, "TBATS_DHR-ARIMA_Theta");
    }

    #[test]
    fn identical_columns_tie() {
        let errors = vec![vec![2.0; 4], vec![7.0; 4]];
        let r = oracle_study(&errors, &NAMES).unwrap();
        assert!(r.subsets.iter().all(|s| s.mean == 4.5 && s.median == 4.5));
    }

    proptest! {
        #[test]
        fn superset_dominance(rows in prop::collection::vec(prop::collection::vec(0.0f64..50.0, 4), 1..30)) {
            let r = oracle_study(&rows, &NAMES).unwrap();
            prop_assert!(r.superset_dominates());
        }
    }
}
