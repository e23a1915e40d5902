//! Locally trained base forecasters and the forecast cache format.

pub mod arima;
pub mod cache;
pub mod dhr;
pub mod tbats;
pub mod theta;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dhr::DhrArimaModel;
pub use tbats::TbatsModel;
pub use theta::{theta_fit_forecast, ThetaModel};

/// The four base forecasters of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProviderId {
    Theta,
    Tbats,
    DhrArima,
    Rnn,
}

impl ProviderId {
    /// Column order used by forecast matrices and weight tables.
    pub const ALL: [ProviderId; 4] = [
        ProviderId::Tbats,
        ProviderId::DhrArima,
        ProviderId::Theta,
        ProviderId::Rnn,
    ];

    /// Display name, as used for method rows in reports.
    pub fn name(self) -> &'static str {
        match self {
            ProviderId::Theta => "Theta",
            ProviderId::Tbats => "TBATS",
            ProviderId::DhrArima => "DHR-ARIMA",
            ProviderId::Rnn => "RNN",
        }
    }

    /// File-name friendly key.
    pub fn key(self) -> &'static str {
        match self {
            ProviderId::Theta => "theta",
            ProviderId::Tbats => "tbats",
            ProviderId::DhrArima => "dhr_arima",
            ProviderId::Rnn => "rnn",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ProviderId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s) || p.key().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for ProviderId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Point forecasts of one provider for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderForecast {
    pub values: Vec<f64>,
    /// Set when the provider could not be fitted and the last value was repeated.
    pub fallback: bool,
}

pub(crate) fn repeat_last(y: &[f64], h: usize) -> Vec<f64> {
    vec![y.last().copied().unwrap_or(0.0); h]
}

/// Runs `fit`, substituting a repeat-last-value forecast when the series is
/// too short or the fit fails, so every provider yields exactly `h` values.
pub fn with_fallback<F>(y: &[f64], h: usize, fit: F) -> ProviderForecast
where
    F: FnOnce(&[f64], usize) -> Result<Vec<f64>>,
{
    match fit(y, h) {
        Ok(values) if values.len() == h && values.iter().all(|v| v.is_finite()) => ProviderForecast {
            values,
            fallback: false,
        },
        Ok(_) => {
            log::warn!("provider returned malformed forecasts; repeating last value");
            ProviderForecast {
                values: repeat_last(y, h),
                fallback: true,
            }
        }
        Err(e) => {
            log::debug!("provider fallback: {e}");
            ProviderForecast {
                values: repeat_last(y, h),
                fallback: true,
            }
        }
    }
}

/// TBATS forecast for one series, with fallback.
pub fn tbats_forecast_series(y: &[f64], h: usize, period: f64) -> ProviderForecast {
    with_fallback(y, h, |y, h| Ok(TbatsModel::fit(y, period)?.forecast(h)))
}

/// Theta forecast for one series, with fallback.
pub fn theta_forecast_series(y: &[f64], h: usize) -> ProviderForecast {
    with_fallback(y, h, theta_fit_forecast)
}

/// DHR-ARIMA forecast for one series at a given Fourier order (capped by length).
pub fn dhr_forecast_series(y: &[f64], h: usize, period: f64, k: usize) -> ProviderForecast {
    with_fallback(y, h, |y, h| {
        let kk = k.min(dhr::max_order_for_length(y.len(), period));
        if kk == 0 {
            return Err(Error::SeriesTooShort {
                what: "DHR-ARIMA",
                needed: 13,
                got: y.len(),
            });
        }
        Ok(DhrArimaModel::fit(y, period, kk)?.forecast(h))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_repeats_last() {
        let f = theta_forecast_series(&[4.0, 6.0], 3);
        assert!(f.fallback);
        assert_eq!(f.values, vec![6.0; 3]);
        let g = dhr_forecast_series(&[1.0; 10], 4, 52.18, 5);
        assert!(g.fallback && g.values.len() == 4);
    }

    #[test]
    fn names_round_trip() {
        for p in ProviderId::ALL {
            assert_eq!(ProviderId::from_name(p.name()), Some(p));
            assert_eq!(ProviderId::from_name(p.key()), Some(p));
        }
    }
}
