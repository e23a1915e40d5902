//! The closed set of method names that can appear in a run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combine::LassoVariant;
use crate::error::{Error, Result};
use crate::models::ProviderId;

/// Variants are declared in report row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Theta,
    Tbats,
    DhrArima,
    Rnn,
    Average,
    FformaOriginal,
    FformaModified,
    LrPhForecastsFeatures,
    LrPhLogForecastsFeatures,
    LrPhLogForecasts,
    LrSForecastsFeatures,
    LrSLogForecastsFeatures,
    LrSLogForecasts,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Theta,
        Method::Tbats,
        Method::DhrArima,
        Method::Rnn,
        Method::Average,
        Method::FformaOriginal,
        Method::FformaModified,
        Method::LrPhForecastsFeatures,
        Method::LrPhLogForecastsFeatures,
        Method::LrPhLogForecasts,
        Method::LrSForecastsFeatures,
        Method::LrSLogForecastsFeatures,
        Method::LrSLogForecasts,
    ];

    pub const BASE: [Method; 4] = [Method::Tbats, Method::DhrArima, Method::Theta, Method::Rnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Theta => "Theta",
            Method::Tbats => "TBATS",
            Method::DhrArima => "DHR-ARIMA",
            Method::Rnn => "RNN",
            Method::Average => "Average",
            Method::FformaOriginal => "FFORMA_Original",
            Method::FformaModified => "FFORMA_Modified",
            Method::LrPhForecastsFeatures => "LR_PH_Forecasts_Features",
            Method::LrPhLogForecastsFeatures => "LR_PH_Log_Forecasts_Features",
            Method::LrPhLogForecasts => "LR_PH_Log_Forecasts",
            Method::LrSForecastsFeatures => "LR_S_Forecasts_Features",
            Method::LrSLogForecastsFeatures => "LR_S_Log_Forecasts_Features",
            Method::LrSLogForecasts => "LR_S_Log_Forecasts",
        }
    }

    pub fn provider(self) -> Option<ProviderId> {
        match self {
            Method::Theta => Some(ProviderId::Theta),
            Method::Tbats => Some(ProviderId::Tbats),
            Method::DhrArima => Some(ProviderId::DhrArima),
            Method::Rnn => Some(ProviderId::Rnn),
            _ => None,
        }
    }

    pub fn is_combiner(self) -> bool {
        self.provider().is_none()
    }

    pub fn lasso_variant(self) -> Option<LassoVariant> {
        match self {
            Method::LrPhForecastsFeatures => Some(LassoVariant::PerHorizonFeatures),
            Method::LrPhLogForecastsFeatures => Some(LassoVariant::PerHorizonLogFeatures),
            Method::LrPhLogForecasts => Some(LassoVariant::PerHorizonLog),
            Method::LrSForecastsFeatures => Some(LassoVariant::SingleFeatures),
            Method::LrSLogForecastsFeatures => Some(LassoVariant::SingleLogFeatures),
            Method::LrSLogForecasts => Some(LassoVariant::SingleLog),
            _ => None,
        }
    }

    /// Whether the method consumes series features.
    pub fn needs_features(self) -> bool {
        self == Method::FformaModified || self.lasso_variant().is_some_and(LassoVariant::with_features)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::config("methods", format!("unknown method `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_in_order() {
        for w in Method::ALL.windows(2) {
            assert!(w[0] < w[1]);
        }
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::ALL.iter().filter(|m| m.is_combiner()).count(), 9);
    }

    #[test]
    fn lasso_names_agree() {
        for m in Method::ALL {
            if let Some(v) = m.lasso_variant() {
                assert_eq!(v.name(), m.name());
            }
        }
    }
}
