use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Seasonal periodicity and number of sine/cosine pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    pub period: f64,
    pub k_max: usize,
}

impl FourierSpec {
    /// `2 * k_max` must stay below the period so that harmonics remain distinct.
    pub fn new(period: f64, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidInput("Fourier order must be at least 1".into()));
        }
        if !(period.is_finite() && (2 * k_max) as f64 <= period) {
            return Err(Error::InvalidInput(format!(
                "Fourier order {k_max} too large for period {period}"
            )));
        }
        Ok(Self { period, k_max })
    }

    pub fn columns(&self) -> usize {
        2 * self.k_max
    }
}

/// `n` rows of Fourier covariates for times `t_start .. t_start + n`.
///
/// Columns alternate `sin(2πkt/s)`, `cos(2πkt/s)` for `k = 1..=k_max`.
pub fn fourier_terms<T: Scalar>(spec: &FourierSpec, t_start: i64, n: usize) -> Vec<Vec<T>> {
    let period = T::lit(spec.period);
    let two_pi = T::lit(std::f64::consts::TAU);
    (0..n)
        .map(|j| {
            let t = T::lit((t_start + j as i64) as f64);
            let mut row = Vec::with_capacity(spec.columns());
            for k in 1..=spec.k_max {
                // Reduce the phase to [0, 1) before scaling by 2π so exact
                // multiples of the period land on 0.
                let cycles = T::from_usize_lossy(k) * t / period;
                let phase = two_pi * (cycles - cycles.floor());
                row.push(phase.sin());
                row.push(phase.cos());
            }
            row
        })
        .collect()
}
