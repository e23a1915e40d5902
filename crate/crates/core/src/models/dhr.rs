//! Dynamic harmonic regression: Fourier regression with ARIMA errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{smape, SmapeVariant};
use crate::series::{fourier_terms, split_last_h, FourierSpec};

use super::arima::{auto_arima, ArimaFit, StepwiseBounds};

pub const MAX_FOURIER_ORDER: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhrArimaModel {
    pub k: usize,
    pub period: f64,
    /// Intercept followed by the `2k` Fourier coefficients.
    pub beta: Vec<f64>,
    pub arima: ArimaFit,
    /// Number of observations the model was fitted on.
    pub n: usize,
}

/// Largest usable Fourier order for a series of length `n`.
pub fn max_order_for_length(n: usize, period: f64) -> usize {
    let by_len = n.saturating_sub(11) / 2;
    let by_period = ((period / 2.0).ceil() as usize).saturating_sub(1);
    by_len.min(by_period).min(MAX_FOURIER_ORDER)
}

fn design(spec: &FourierSpec, t_start: i64, n: usize) -> DMatrix<f64> {
    let rows = fourier_terms::<f64>(spec, t_start, n);
    DMatrix::from_fn(n, 1 + spec.columns(), |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] })
}

impl DhrArimaModel {
    pub fn fit(y: &[f64], period: f64, k: usize) -> Result<Self> {
        if k == 0 || k > MAX_FOURIER_ORDER {
            return Err(Error::InvalidInput(format!(
                "Fourier order {k} outside 1..={MAX_FOURIER_ORDER}"
            )));
        }
        if 2 * k >= y.len() {
            return Err(Error::RankDeficient { k });
        }
        if y.len() <= 2 * k + 10 {
            return Err(Error::SeriesTooShort {
                what: "DHR-ARIMA",
                needed: 2 * k + 11,
                got: y.len(),
            });
        }
        let spec = FourierSpec::new(period, k).map_err(|_| Error::RankDeficient { k })?;
        let x = design(&spec, 1, y.len());
        let yv = DVector::from_column_slice(y);
        let beta = crate::stats::least_squares(&x, &yv).ok_or(Error::RankDeficient { k })?;
        let resid: Vec<f64> = (&yv - &x * &beta).iter().copied().collect();
        let arima = auto_arima(&resid, StepwiseBounds::default())?;
        Ok(Self {
            k,
            period,
            beta: beta.iter().copied().collect(),
            arima,
            n: y.len(),
        })
    }

    /// Harmonic regression values at `t = n+1 ..= n+h`.
    pub fn regression_forecast(&self, h: usize) -> Vec<f64> {
        let spec = FourierSpec {
            period: self.period,
            k_max: self.k,
        };
        let x = design(&spec, self.n as i64 + 1, h);
        let beta = DVector::from_column_slice(&self.beta);
        (x * beta).iter().copied().collect()
    }

    pub fn forecast(&self, h: usize) -> Vec<f64> {
        self.regression_forecast(h)
            .into_iter()
            .zip(self.arima.forecast(h))
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Outcome of the dataset-level Fourier order search.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSearch {
    pub k: usize,
    /// Mean validation sMAPE for every candidate order evaluated.
    pub scores: Vec<(usize, f64)>,
    /// Validation forecasts of the selected order, one vector per series.
    pub validation_forecasts: Vec<Vec<f64>>,
}

/// Picks the single Fourier order minimising mean validation sMAPE over a
/// collection of series. For each series the order is capped where its
/// length forbids it; series whose fit fails fall back to repeating the last
/// value.
pub fn select_order(
    series: &[Vec<f64>],
    horizon: usize,
    period: f64,
    candidates: &[usize],
    variant: SmapeVariant,
) -> Result<OrderSearch> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty Fourier order grid".into()));
    }
    let splits = series
        .iter()
        .map(|s| split_last_h(s, horizon))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;
    let mut scores = Vec::with_capacity(candidates.len());
    for &k in candidates {
        let forecasts: Vec<Vec<f64>> = crate::par_map(&splits, |sp| {
            let cap = max_order_for_length(sp.training.len(), period);
            let kk = k.min(cap);
            if kk == 0 {
                return super::repeat_last(&sp.training, horizon);
            }
            DhrArimaModel::fit(&sp.training, period, kk)
                .map(|m| m.forecast(horizon))
                .unwrap_or_else(|_| super::repeat_last(&sp.training, horizon))
        });
        let mut total = 0.0;
        for (f, sp) in forecasts.iter().zip(&splits) {
            total += smape(f, &sp.validation, variant)?;
        }
        let score = total / splits.len() as f64;
        scores.push((k, score));
        if best.as_ref().is_none_or(|b| score < b.1) {
            best = Some((k, score, forecasts));
        }
    }
    let (k, _, validation_forecasts) = best.expect("non-empty grid");
    Ok(OrderSearch {
        k,
        scores,
        validation_forecasts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sine(n: usize, noise: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (1..=n)
            .map(|t| {
                let e: f64 = rng.sample(StandardNormal);
                3.0 + (std::f64::consts::TAU * t as f64 / 52.0).sin() + noise * e
            })
            .collect()
    }

    #[test]
    fn recovers_sine_coefficient() {
        let y = sine(156, 0.05, 1);
        let m = DhrArimaModel::fit(&y, 52.0, 1).unwrap();
        assert!((m.beta[0] - 3.0).abs() < 0.05);
        assert!((m.beta[1] - 1.0).abs() < 0.05, "{:?}", m.beta);
        assert!(m.beta[2].abs() < 0.05);
    }

    #[test]
    fn ar1_errors_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut prev = 0.0;
        let y: Vec<f64> = (1..=156)
            .map(|t| {
                let e: f64 = rng.sample(StandardNormal);
                prev = 0.8 * prev + 0.3 * e;
                3.0 + (std::f64::consts::TAU * t as f64 / 52.0).sin() + prev
            })
            .collect();
        let m = DhrArimaModel::fit(&y, 52.0, 1).unwrap();
        assert!(m.arima.order.p >= 1 || m.arima.order.d >= 1, "{:?}", m.arima.order);
    }

    #[test]
    fn rank_deficient_k() {
        let y = sine(30, 0.1, 3);
        assert!(matches!(
            DhrArimaModel::fit(&y[..20], 52.0, 10),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn zero_arma_equals_regression() {
        let y = sine(120, 0.2, 4);
        let mut m = DhrArimaModel::fit(&y, 52.0, 2).unwrap();
        let x = design(&FourierSpec::new(52.0, 2).unwrap(), 1, y.len());
        let resid: Vec<f64> = (DVector::from_column_slice(&y) - x * DVector::from_column_slice(&m.beta))
            .iter()
            .copied()
            .collect();
        m.arima = ArimaFit::from_coefficients(&resid, 0, vec![], vec![]).unwrap();
        assert_eq!(m.forecast(10), m.regression_forecast(10));
    }

    #[test]
    fn harmonic_periodicity() {
        let y = sine(130, 0.2, 5);
        let m = DhrArimaModel::fit(&y, 52.0, 3).unwrap();
        let f = m.forecast(60);
        let resid = m.arima.forecast(60);
        for t in 0..8 {
            let lhs = f[t + 52] - f[t];
            let rhs = resid[t + 52] - resid[t];
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn single_candidate_grid() {
        let data: Vec<Vec<f64>> = (0..3).map(|s| sine(100, 0.1, s)).collect();
        let out = select_order(&data, 8, 52.0, &[3], SmapeVariant::Standard).unwrap();
        assert_eq!(out.k, 3);
    }

    #[test]
    fn selects_low_order_for_pure_sinusoids() {
        let data: Vec<Vec<f64>> = (0..4).map(|s| sine(110, 0.02, 10 + s)).collect();
        let out = select_order(&data, 8, 52.0, &[1, 2, 4], SmapeVariant::Standard).unwrap();
        let score_of = |k| out.scores.iter().find(|(kk, _)| *kk == k).unwrap().1;
        let chosen = score_of(out.k);
        assert!(out.k == 1 || (chosen - score_of(1)).abs() < 0.1);
        assert!(out.scores.iter().all(|(_, s)| chosen <= *s));
    }
}
