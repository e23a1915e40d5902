//! Theta method as simple exponential smoothing with drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::golden_section;
use crate::stats::linear_trend;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaModel {
    pub alpha: f64,
    /// Per-step drift: half the least-squares slope of the series.
    pub drift: f64,
    /// Final smoothed level.
    pub level: f64,
}

fn ses_sse(y: &[f64], alpha: f64) -> (f64, f64) {
    let mut level = y[0];
    let mut sse = 0.0;
    for &v in &y[1..] {
        let e = v - level;
        sse += e * e;
        level += alpha * e;
    }
    (sse, level)
}

impl ThetaModel {
    pub fn fit(y: &[f64]) -> Result<Self> {
        if y.len() < 3 {
            return Err(Error::SeriesTooShort {
                what: "Theta (series too short)",
                needed: 3,
                got: y.len(),
            });
        }
        const LO: f64 = 1e-4;
        const HI: f64 = 1.0 - 1e-4;
        // Coarse grid to bracket the global minimum, then golden-section refinement.
        let grid = 100;
        let step = (HI - LO) / grid as f64;
        let (mut best_a, mut best_sse) = (LO, f64::INFINITY);
        for i in 0..=grid {
            let a = LO + step * i as f64;
            let (sse, _) = ses_sse(y, a);
            if sse < best_sse {
                best_sse = sse;
                best_a = a;
            }
        }
        let lo = (best_a - step).max(LO);
        let hi = (best_a + step).min(HI);
        let (a, sse) = golden_section(|a| ses_sse(y, a).0, lo, hi, 1e-10);
        let alpha = if sse < best_sse { a } else { best_a };
        let (_, level) = ses_sse(y, alpha);
        let (_, slope) = linear_trend(y);
        Ok(Self {
            alpha,
            drift: slope / 2.0,
            level,
        })
    }

    pub fn forecast(&self, h: usize) -> Vec<f64> {
        (1..=h).map(|j| self.level + j as f64 * self.drift).collect()
    }
}

pub fn theta_fit_forecast(y: &[f64], h: usize) -> Result<Vec<f64>> {
    Ok(ThetaModel::fit(y)?.forecast(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let f = theta_fit_forecast(&[5.0; 20], 3).unwrap();
        for v in f {
            assert!((v - 5.0).abs() < 1e-6);
        }
    }

    #[test]
    fn noiseless_line() {
        let y: Vec<f64> = (1..=50).map(|t| 2.0 * t as f64).collect();
        let f = theta_fit_forecast(&y, 2).unwrap();
        for (j, v) in f.iter().enumerate() {
            let truth = 2.0 * (51 + j) as f64;
            assert!((v - truth).abs() / truth < 0.02, "{v} vs {truth}");
        }
    }

    #[test]
    fn too_short() {
        let err = theta_fit_forecast(&[1.0, 2.0], 1).unwrap_err();
        assert!(err.to_string().contains("series too short"));
    }

    #[test]
    fn alpha_in_unit_interval() {
        let y = [3.0, 9.0, 1.0, 7.0, 2.0, 8.0, 4.0];
        let m = ThetaModel::fit(&y).unwrap();
        assert!((0.0..=1.0).contains(&m.alpha));
    }
}
