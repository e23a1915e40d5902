//! Friedman rank-sum test and Hochberg step-up post-hoc comparison against
//! the best-ranked method.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Mean rank per method (rank 1 = lowest error).
    pub mean_ranks: Vec<f64>,
    pub n_blocks: usize,
}

/// Average ranks of one row, ties sharing the mean of their positions.
pub fn rank_row(row: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && row[idx[j + 1]] == row[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// `errors[series][method]`.
pub fn friedman_test(errors: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = errors.len();
    let k = errors.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InvalidInput(format!(
            "Friedman test needs at least 2 series and 2 methods, got {n} x {k}"
        )));
    }
    if errors.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidInput("ragged error matrix".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in errors {
        let ranks = rank_row(row);
        for (s, r) in rank_sums.iter_mut().zip(&ranks) {
            *s += r;
        }
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let expected = nf * (kf + 1.0) / 2.0;
    let ss: f64 = rank_sums.iter().map(|r| (r - expected).powi(2)).sum();
    let denom = nf * kf * (kf + 1.0) - tie_term / (kf - 1.0);
    let mean_ranks = rank_sums.iter().map(|r| r / nf).collect();
    if denom <= 1e-12 {
        return Ok(FriedmanResult {
            statistic: 0.0,
            p_value: 1.0,
            mean_ranks,
            n_blocks: n,
        });
    }
    let statistic = 12.0 * ss / denom;
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(FriedmanResult {
        statistic,
        p_value: chi.sf(statistic).clamp(0.0, 1.0),
        mean_ranks,
        n_blocks: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocComparison {
    pub method: usize,
    pub z: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocResult {
    pub control: usize,
    /// One entry per non-control method, in method order.
    pub comparisons: Vec<PosthocComparison>,
}

/// Rank-based z tests of every method against the best-ranked one, with
/// Hochberg step-up adjusted p-values.
pub fn hochberg_posthoc(mean_ranks: &[f64], n: usize, alpha: f64) -> Result<PosthocResult> {
    let k = mean_ranks.len();
    if k < 2 || n == 0 {
        return Err(Error::InvalidInput("post-hoc test needs at least 2 methods".into()));
    }
    let control = mean_ranks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * n as f64)).sqrt();
    let normal = Normal::standard();
    let mut comparisons: Vec<PosthocComparison> = (0..k)
        .filter(|&j| j != control)
        .map(|j| {
            let z = (mean_ranks[j] - mean_ranks[control]) / se;
            let raw_p = (2.0 * normal.sf(z.abs())).min(1.0);
            PosthocComparison {
                method: j,
                z,
                raw_p,
                adjusted_p: raw_p,
                significant: false,
            }
        })
        .collect();

    let m = comparisons.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| comparisons[a].raw_p.total_cmp(&comparisons[b].raw_p));
    // Step-up from the largest p-value: adj_(i) = min_{j ≥ i} (m - j + 1) p_(j).
    let mut running = 1.0f64;
    for (pos, &idx) in order.iter().enumerate().rev() {
        let factor = (m - pos) as f64;
        running = running.min((factor * comparisons[idx].raw_p).min(1.0));
        comparisons[idx].adjusted_p = running;
    }
    for c in comparisons.iter_mut() {
        c.significant = c.adjusted_p < alpha;
    }
    Ok(PosthocResult {
        control,
        comparisons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn average_tie_ranks() {
        assert_eq!(rank_row(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn dominant_method_ranks_first() {
        let errors: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![1.0 + i as f64 * 0.01, 2.0 + (i % 3) as f64, 2.5 + (i % 2) as f64 * 2.0])
            .collect();
        let r = friedman_test(&errors).unwrap();
        assert_eq!(r.mean_ranks[0], 1.0);
        assert!(r.p_value < 1e-3);
    }

    #[test]
    fn identical_rows() {
        let r = friedman_test(&vec![vec![1.0, 1.0, 1.0]; 5]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn two_methods_unadjusted() {
        let post = hochberg_posthoc(&[1.2, 1.8], 30, 0.05).unwrap();
        assert_eq!(post.control, 0);
        assert_eq!(post.comparisons.len(), 1);
        assert_eq!(post.comparisons[0].adjusted_p, post.comparisons[0].raw_p);
    }

    #[test]
    fn adjusted_monotone_in_raw_order() {
        let post = hochberg_posthoc(&[2.1, 1.0, 3.9, 2.5, 3.0, 1.3], 40, 0.05).unwrap();
        assert!(post.comparisons.iter().all(|c| c.method != post.control));
        let mut cs = post.comparisons.clone();
        cs.sort_by(|a, b| a.raw_p.total_cmp(&b.raw_p));
        for w in cs.windows(2) {
            assert!(w[0].adjusted_p <= w[1].adjusted_p);
        }
        assert!(cs.iter().all(|c| (0.0..=1.0).contains(&c.adjusted_p) && c.adjusted_p >= c.raw_p));
    }

    proptest! {
        #[test]
        fn column_permutation_permutes_ranks(rows in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 4), 2..12)) {
            let base = friedman_test(&rows).unwrap();
            let perm = [2usize, 0, 3, 1];
            let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
            let other = friedman_test(&permuted).unwrap();
            for (i, &j) in perm.iter().enumerate() {
                prop_assert!((other.mean_ranks[i] - base.mean_ranks[j]).abs() < 1e-12);
            }
            prop_assert!((other.statistic - base.statistic).abs() < 1e-9);
        }

        #[test]
        fn invariant_under_monotone_transform(rows in prop::collection::vec(prop::collection::vec(0.01f64..10.0, 3), 2..12)) {
            let base = friedman_test(&rows).unwrap();
            let logged: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.ln() * 3.0 + 1.0).collect()).collect();
            let other = friedman_test(&logged).unwrap();
            prop_assert!((other.statistic - base.statistic).abs() < 1e-9);
        }
    }
}
