//! Lasso stacking of base forecasts: one global model or one per step,
//! optionally in log space and optionally with series features.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, FEATURE_NAMES};
use super::lasso::{nnlasso_cv, LassoModel};
use super::transform::LogTransform;
use super::ForecastMatrix;
use crate::error::{Error, Result};
use crate::models::ProviderId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LassoVariant {
    SingleLog,
    SingleLogFeatures,
    SingleFeatures,
    PerHorizonLog,
    PerHorizonLogFeatures,
    PerHorizonFeatures,
}

impl LassoVariant {
    pub const ALL: [LassoVariant; 6] = [
        LassoVariant::SingleLog,
        LassoVariant::PerHorizonLog,
        LassoVariant::SingleLogFeatures,
        LassoVariant::PerHorizonLogFeatures,
        LassoVariant::SingleFeatures,
        LassoVariant::PerHorizonFeatures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LassoVariant::SingleLog => "LR_S_Log_Forecasts",
            LassoVariant::SingleLogFeatures => "LR_S_Log_Forecasts_Features",
            LassoVariant::SingleFeatures => "LR_S_Forecasts_Features",
            LassoVariant::PerHorizonLog => "LR_PH_Log_Forecasts",
            LassoVariant::PerHorizonLogFeatures => "LR_PH_Log_Forecasts_Features",
            LassoVariant::PerHorizonFeatures => "LR_PH_Forecasts_Features",
        }
    }

    pub fn per_horizon(self) -> bool {
        matches!(
            self,
            LassoVariant::PerHorizonLog | LassoVariant::PerHorizonLogFeatures | LassoVariant::PerHorizonFeatures
        )
    }

    pub fn log_space(self) -> bool {
        !matches!(self, LassoVariant::SingleFeatures | LassoVariant::PerHorizonFeatures)
    }

    pub fn with_features(self) -> bool {
        !matches!(self, LassoVariant::SingleLog | LassoVariant::PerHorizonLog)
    }
}

impl fmt::Display for LassoVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LassoVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LassoVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown lasso variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoStack {
    pub variant: LassoVariant,
    pub models: Vec<ProviderId>,
    pub horizon: usize,
    /// Present for the log-space variants.
    pub transform: Option<LogTransform<f64>>,
    /// One fit, or one per step for the per-horizon variants.
    pub fits: Vec<LassoModel<f64>>,
}

impl LassoStack {
    pub fn n_columns(&self) -> usize {
        self.models.len() + if self.variant.with_features() { FEATURE_NAMES.len() } else { 0 }
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.models.iter().map(|m| m.name().to_string()).collect();
        if self.variant.with_features() {
            names.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
        }
        names
    }

    fn fit_for_step(&self, j: usize) -> &LassoModel<f64> {
        if self.variant.per_horizon() {
            &self.fits[j]
        } else {
            &self.fits[0]
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("variant={}\ncolumns={}\n", self.variant, self.column_names().join(","));
        out.push_str(&format!("horizon={}\n", self.horizon));
        match self.transform {
            Some(t) => out.push_str(&format!("c={}\n", t.c)),
            None => out.push_str("c=none\n"),
        }
        for (j, fit) in self.fits.iter().enumerate() {
            let step = if self.variant.per_horizon() { (j + 1).to_string() } else { "all".into() };
            let w: Vec<String> = fit.weights.iter().map(f64::to_string).collect();
            out.push_str(&format!(
                "step={step} lambda={} intercept={} weights={}\n",
                fit.lambda,
                fit.intercept,
                w.join(";")
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::Parse {
            line,
            message: m.to_string(),
        };
        let mut variant = None;
        let mut models = Vec::new();
        let mut horizon = None;
        let mut transform = None;
        let mut fits = Vec::new();
        for (i, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("variant=") {
                variant = Some(v.parse::<LassoVariant>()?);
            } else if let Some(v) = line.strip_prefix("columns=") {
                models = v.split(',').filter_map(ProviderId::from_name).collect();
            } else if let Some(v) = line.strip_prefix("horizon=") {
                horizon = Some(v.parse().map_err(|_| bad(i, "bad horizon"))?);
            } else if let Some(v) = line.strip_prefix("c=") {
                if v != "none" {
                    transform = Some(LogTransform {
                        c: v.parse().map_err(|_| bad(i, "bad shift"))?,
                    });
                }
            } else if line.starts_with("step=") {
                let mut lambda = None;
                let mut intercept = None;
                let mut weights = None;
                for part in line.split_whitespace() {
                    let (k, v) = part.split_once('=').ok_or_else(|| bad(i, "expected key=value"))?;
                    match k {
                        "lambda" => lambda = v.parse().ok(),
                        "intercept" => intercept = v.parse().ok(),
                        "weights" => {
                            weights = v
                                .split(';')
                                .map(str::parse::<f64>)
                                .collect::<std::result::Result<Vec<_>, _>>()
                                .ok()
                        }
                        _ => {}
                    }
                }
                fits.push(LassoModel {
                    lambda: lambda.ok_or_else(|| bad(i, "missing lambda"))?,
                    intercept: intercept.ok_or_else(|| bad(i, "missing intercept"))?,
                    weights: weights.ok_or_else(|| bad(i, "missing weights"))?,
                    sweeps: 0,
                    converged: true,
                });
            } else {
                return Err(bad(i, "unrecognised line"));
            }
        }
        Ok(Self {
            variant: variant.ok_or_else(|| bad(0, "missing variant"))?,
            models,
            horizon: horizon.ok_or_else(|| bad(0, "missing horizon"))?,
            transform,
            fits,
        })
    }
}

fn design_row(
    forecasts: &[f64],
    features: Option<&FeatureVector>,
    transform: Option<&LogTransform<f64>>,
) -> Vec<f64> {
    let mut row: Vec<f64> = match transform {
        Some(t) => forecasts.iter().map(|&v| t.forward(v)).collect(),
        None => forecasts.to_vec(),
    };
    if let Some(f) = features {
        row.extend_from_slice(&f.values);
    }
    row
}

fn check_features(variant: LassoVariant, features: Option<&[FeatureVector]>, n_series: usize) -> Result<()> {
    match (variant.with_features(), features) {
        (false, _) => Ok(()),
        (true, Some(f)) if f.len() == n_series => Ok(()),
        (true, _) => Err(Error::InvalidInput(format!(
            "{variant} needs one feature vector per series"
        ))),
    }
}

/// Fits the stack on validation-window forecasts and their actuals.
/// `features` are in the matrix's series order.
pub fn lasso_stack_train(
    fm: &ForecastMatrix<f64>,
    features: Option<&[FeatureVector]>,
    variant: LassoVariant,
    folds: usize,
    seed: u64,
) -> Result<LassoStack> {
    let actuals = fm
        .actuals
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("training forecasts need validation actuals".into()))?;
    check_features(variant, features, fm.n_series())?;
    let transform = variant.log_space().then(|| {
        LogTransform::fit(fm.values.iter().flatten().chain(actuals.iter()))
    });
    let h = fm.horizon;
    let mut x = Vec::with_capacity(fm.n_rows());
    let mut y = Vec::with_capacity(fm.n_rows());
    for (r, row) in fm.values.iter().enumerate() {
        let f = features.map(|f| &f[r / h]);
        x.push(design_row(row, f, transform.as_ref()));
        y.push(match &transform {
            Some(t) => t.forward(actuals[r]),
            None => actuals[r],
        });
    }

    let fits = if variant.per_horizon() {
        (0..h)
            .map(|j| {
                let idx: Vec<usize> = (0..fm.n_rows()).filter(|r| r % h == j).collect();
                let xs: Vec<Vec<f64>> = idx.iter().map(|&r| x[r].clone()).collect();
                let ys: Vec<f64> = idx.iter().map(|&r| y[r]).collect();
                nnlasso_cv(&xs, &ys, folds, seed.wrapping_add(j as u64)).map(|cv| cv.model)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![nnlasso_cv(&x, &y, folds, seed)?.model]
    };
    Ok(LassoStack {
        variant,
        models: fm.models.clone(),
        horizon: h,
        transform,
        fits,
    })
}

/// Applies the stack to test-window forecasts; outputs are clamped at zero.
pub fn lasso_stack_predict(
    stack: &LassoStack,
    fm: &ForecastMatrix<f64>,
    features: Option<&[FeatureVector]>,
) -> Result<Vec<f64>> {
    if fm.models != stack.models {
        return Err(Error::ColumnMismatch {
            expected: stack.models.len(),
            got: fm.models.len(),
        });
    }
    if fm.horizon != stack.horizon {
        return Err(Error::InvalidInput(format!(
            "stack trained for horizon {}, matrix has {}",
            stack.horizon, fm.horizon
        )));
    }
    check_features(stack.variant, features, fm.n_series())?;
    let h = fm.horizon;
    Ok(fm
        .values
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let f = features.filter(|_| stack.variant.with_features()).map(|f| &f[r / h]);
            let z = stack.fit_for_step(r % h).predict(&design_row(row, f, stack.transform.as_ref()));
            match &stack.transform {
                Some(t) => t.inverse(z),
                None => z.max(0.0),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::features::N_FEATURES;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(n_series: usize, h: usize, seed: u64) -> ForecastMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut values = Vec::new();
        let mut actuals = Vec::new();
        for s in 0..n_series {
            for j in 0..h {
                let y = 20.0 + s as f64 + j as f64;
                actuals.push(y);
                values.push(vec![
                    y * (1.0 + 0.01 * noise.sample(&mut rng)),
                    y * (1.0 + noise.sample(&mut rng)).abs(),
                    y * (1.0 + noise.sample(&mut rng)).abs(),
                    y * (1.0 + noise.sample(&mut rng)).abs(),
                ]);
            }
        }
        ForecastMatrix::new(
            ProviderId::ALL.to_vec(),
            (0..n_series).map(|i| format!("s{i}")).collect(),
            h,
            values,
            Some(actuals),
        )
        .unwrap()
    }

    fn features(n: usize) -> Vec<FeatureVector> {
        (0..n)
            .map(|i| FeatureVector {
                values: [i as f64; N_FEATURES],
            })
            .collect()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in LassoVariant::ALL {
            assert_eq!(v.name().parse::<LassoVariant>().unwrap(), v);
        }
    }

    #[test]
    fn column_counts() {
        let fm = matrix(30, 8, 1);
        let s = lasso_stack_train(&fm, None, LassoVariant::SingleLog, 10, 1).unwrap();
        assert_eq!(s.fits.len(), 1);
        assert_eq!(s.fits[0].weights.len(), 4);
        let f = features(30);
        let s = lasso_stack_train(&fm, Some(&f), LassoVariant::SingleLogFeatures, 10, 1).unwrap();
        assert_eq!(s.fits[0].weights.len(), 24);
        let s = lasso_stack_train(&fm, None, LassoVariant::PerHorizonLog, 10, 1).unwrap();
        assert_eq!(s.fits.len(), 8);
    }

    #[test]
    fn picks_accurate_model() {
        let fm = matrix(50, 4, 2);
        let s = lasso_stack_train(&fm, None, LassoVariant::SingleLog, 10, 3).unwrap();
        assert!(s.fits[0].weights[0] > 0.9, "{:?}", s.fits[0].weights);
    }

    #[test]
    fn one_hot_identity() {
        let fm = matrix(3, 2, 4);
        let stack = LassoStack {
            variant: LassoVariant::SingleLog,
            models: ProviderId::ALL.to_vec(),
            horizon: 2,
            transform: Some(LogTransform { c: 0.0 }),
            fits: vec![LassoModel {
                intercept: 0.0,
                weights: vec![1.0, 0.0, 0.0, 0.0],
                lambda: 0.1,
                sweeps: 0,
                converged: true,
            }],
        };
        let out = lasso_stack_predict(&stack, &fm, None).unwrap();
        for (o, row) in out.iter().zip(&fm.values) {
            assert!((o - row[0]).abs() < 1e-9 * row[0]);
        }
    }

    #[test]
    fn zero_weights_constant_and_nonnegative() {
        let fm = matrix(3, 2, 5);
        let stack = LassoStack {
            variant: LassoVariant::SingleLog,
            models: ProviderId::ALL.to_vec(),
            horizon: 2,
            transform: Some(LogTransform { c: 1.0 }),
            fits: vec![LassoModel {
                intercept: -2.0,
                weights: vec![0.0; 4],
                lambda: 0.1,
                sweeps: 0,
                converged: true,
            }],
        };
        let out = lasso_stack_predict(&stack, &fm, None).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn column_mismatch() {
        let fm = matrix(12, 2, 6);
        let stack = lasso_stack_train(&fm, None, LassoVariant::SingleLog, 10, 1).unwrap();
        let mut other = fm.clone();
        other.models.pop();
        for r in &mut other.values {
            r.pop();
        }
        assert!(matches!(
            lasso_stack_predict(&stack, &other, None),
            Err(Error::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let fm = matrix(20, 3, 7);
        let stack = lasso_stack_train(&fm, None, LassoVariant::PerHorizonLog, 10, 1).unwrap();
        let back = LassoStack::from_text(&stack.to_text()).unwrap();
        assert_eq!(back.variant, stack.variant);
        assert_eq!(back.transform, stack.transform);
        assert_eq!(
            lasso_stack_predict(&back, &fm, None).unwrap(),
            lasso_stack_predict(&stack, &fm, None).unwrap()
        );
    }

    #[test]
    fn permutation_invariant() {
        let fm = matrix(15, 2, 8);
        let stack = lasso_stack_train(&fm, None, LassoVariant::SingleLog, 10, 1).unwrap();
        let a = lasso_stack_predict(&stack, &fm, None).unwrap();
        let perm: Vec<usize> = (0..15).rev().collect();
        let b = lasso_stack_predict(&stack, &fm.permute_series(&perm), None).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(&b[i * 2..i * 2 + 2], &a[p * 2..p * 2 + 2]);
        }
    }
}
