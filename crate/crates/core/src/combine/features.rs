//! Twenty per-series statistics used by the feature-augmented combiners.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{boxcox_lambda, WEEKLY_PERIOD};
use crate::stats::{acf, diff, kpss_statistic, mean, sample_variance, variance, yule_walker_aic};

pub const N_FEATURES: usize = 20;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "length",
    "trend_strength",
    "seasonal_strength",
    "spectral_entropy",
    "acf1",
    "acf10_ssq",
    "diff1_acf1",
    "diff2_acf1",
    "linearity",
    "curvature",
    "stability",
    "lumpiness",
    "crossing_points",
    "flat_spots",
    "longest_run_above_mean",
    "coef_variation",
    "boxcox_lambda",
    "max_level_shift",
    "kpss",
    "nonseasonal_flag",
];

const MIN_LENGTH: usize = 5;
const SPECTRUM_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

/// Local linear smoother with tricube weights over the `span` nearest points.
fn local_linear(y: &[f64], span: usize) -> Vec<f64> {
    let n = y.len();
    let q = span.clamp(3, n);
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(q / 2).min(n - q);
            let hi = lo + q;
            let reach = (t - lo).max(hi - 1 - t) as f64 + 1.0;
            let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, &yi) in y.iter().enumerate().take(hi).skip(lo) {
                let d = (i as f64 - t as f64).abs() / reach;
                let w = (1.0 - d * d * d).powi(3);
                let x = i as f64 - t as f64;
                sw += w;
                sx += w * x;
                sy += w * yi;
                sxx += w * x * x;
                sxy += w * x * yi;
            }
            let det = sw * sxx - sx * sx;
            if det.abs() < 1e-12 * sw * sw.max(1.0) {
                sy / sw
            } else {
                (sxx * sy - sx * sxy) / det
            }
        })
        .collect()
}

const DECOMPOSITION_PASSES: usize = 4;

struct Decomposition {
    trend: Vec<f64>,
    seasonal: Vec<f64>,
    remainder: Vec<f64>,
}

fn decompose(y: &[f64], period: usize) -> Decomposition {
    let n = y.len();
    let (trend, seasonal) = if period > 1 {
        // Alternate trend and seasonal estimates so neither absorbs the other.
        let mut seasonal = vec![0.0; n];
        let mut trend = Vec::new();
        for _ in 0..DECOMPOSITION_PASSES {
            let adjusted: Vec<f64> = y.iter().zip(&seasonal).map(|(a, b)| a - b).collect();
            trend = local_linear(&adjusted, period + 1);
            let mut sums = vec![0.0; period];
            let mut counts = vec![0usize; period];
            for t in 0..n {
                sums[t % period] += y[t] - trend[t];
                counts[t % period] += 1;
            }
            let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c.max(1) as f64).collect();
            let centre = mean(&means);
            seasonal = (0..n).map(|t| means[t % period] - centre).collect();
        }
        (trend, seasonal)
    } else {
        (local_linear(y, (n / 4).max(7)), vec![0.0; n])
    };
    let remainder = (0..n).map(|t| y[t] - trend[t] - seasonal[t]).collect();
    Decomposition {
        trend,
        seasonal,
        remainder,
    }
}

fn strength(component: &[f64], remainder: &[f64]) -> f64 {
    let vr = variance(remainder);
    let sum: Vec<f64> = component.iter().zip(remainder).map(|(a, b)| a + b).collect();
    let vs = variance(&sum);
    if vs <= 1e-300 {
        return 0.0;
    }
    (1.0 - vr / vs).clamp(0.0, 1.0)
}

/// Coefficients of `x` on orthonormal linear and quadratic time polynomials.
fn poly_coefficients(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let tc: Vec<f64> = (0..n).map(|t| t as f64 - (n as f64 - 1.0) / 2.0).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n1 = norm(&tc);
    let p1: Vec<f64> = tc.iter().map(|a| a / n1).collect();
    let sq: Vec<f64> = tc.iter().map(|a| a * a).collect();
    let sq_mean = mean(&sq);
    let mut p2: Vec<f64> = sq.iter().map(|a| a - sq_mean).collect();
    let proj: f64 = p2.iter().zip(&p1).map(|(a, b)| a * b).sum();
    for (a, b) in p2.iter_mut().zip(&p1) {
        *a -= proj * b;
    }
    let n2 = norm(&p2);
    let dot = |p: &[f64]| x.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let lin = dot(&p1);
    let curv = if n2 > 0.0 { dot(&p2.iter().map(|a| a / n2).collect::<Vec<_>>()) } else { 0.0 };
    (lin, curv)
}

fn tiled_stats(x: &[f64], width: usize) -> (f64, f64) {
    let means: Vec<f64> = x.chunks(width).map(mean).collect();
    let vars: Vec<f64> = x
        .chunks(width)
        .filter(|c| c.len() >= 2)
        .map(sample_variance)
        .collect();
    let stability = if means.len() >= 2 { sample_variance(&means) } else { 0.0 };
    let lumpiness = if vars.len() >= 2 { sample_variance(&vars) } else { 0.0 };
    (stability, lumpiness)
}

fn max_level_shift(x: &[f64], width: usize) -> f64 {
    let n = x.len();
    if n < 2 * width {
        return 0.0;
    }
    let rolling: Vec<f64> = (0..=n - width).map(|i| mean(&x[i..i + width])).collect();
    (width..rolling.len())
        .map(|i| (rolling[i] - rolling[i - width]).abs())
        .fold(0.0, f64::max)
}

fn spectral_entropy(x: &[f64]) -> f64 {
    let n = x.len();
    let max_order = ((10.0 * (n as f64).log10()).floor() as usize).min(n - 1);
    let (phi, sigma2) = yule_walker_aic(x, max_order);
    let dens: Vec<f64> = (1..=SPECTRUM_POINTS)
        .map(|j| {
            let w = std::f64::consts::PI * j as f64 / SPECTRUM_POINTS as f64;
            let (mut re, mut im) = (1.0, 0.0);
            for (k, p) in phi.iter().enumerate() {
                let a = w * (k + 1) as f64;
                re -= p * a.cos();
                im += p * a.sin();
            }
            sigma2.max(1e-300) / (re * re + im * im).max(1e-300)
        })
        .collect();
    let total: f64 = dens.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return 1.0;
    }
    let h: f64 = dens
        .iter()
        .map(|d| d / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    (h / (SPECTRUM_POINTS as f64).ln()).clamp(0.0, 1.0)
}

fn first_acf(x: &[f64]) -> f64 {
    if x.len() < 3 {
        0.0
    } else {
        acf(x, 1)[0]
    }
}

/// Computes the feature vector. Series with two or more full weekly cycles
/// use period 52 for the seasonal statistics; shorter ones are treated as
/// non-seasonal and flagged.
pub fn extract_features(series: &[f64]) -> Result<FeatureVector> {
    let n = series.len();
    if n < MIN_LENGTH {
        return Err(Error::SeriesTooShort {
            what: "feature extraction",
            needed: MIN_LENGTH,
            got: n,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in series".into()));
    }
    let seasonal = n >= 2 * WEEKLY_PERIOD;
    let period = if seasonal { WEEKLY_PERIOD } else { 1 };
    let x = series;
    let mu = mean(x);
    let sd = sample_variance(x).sqrt();
    let scaled: Vec<f64> = if sd > 0.0 {
        x.iter().map(|v| (v - mu) / sd).collect()
    } else {
        vec![0.0; n]
    };

    let dec = decompose(x, period);
    let trend_strength = strength(&dec.trend, &dec.remainder);
    let seasonal_strength = if seasonal { strength(&dec.seasonal, &dec.remainder) } else { 0.0 };
    let trend_scaled: Vec<f64> = if sd > 0.0 {
        dec.trend.iter().map(|v| (v - mu) / sd).collect()
    } else {
        vec![0.0; n]
    };
    let (linearity, curvature) = poly_coefficients(&trend_scaled);

    let (acf1, acf10) = if sd > 0.0 {
        let lags = 10.min(n - 1);
        let r = acf(x, lags);
        (r[0], r.iter().map(|v| v * v).sum())
    } else {
        (0.0, 0.0)
    };
    let d1 = diff(x, 1);
    let d2 = diff(&d1, 1);

    let width = if seasonal { period } else { 10.min(n / 2).max(2) };
    let (stability, lumpiness) = tiled_stats(&scaled, width);

    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = crate::series::median(&sorted);
    let crossing_points = x.windows(2).filter(|w| (w[0] <= med) != (w[1] <= med)).count() as f64;

    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let flat_spots = if hi > lo {
        let bin = |v: f64| (((v - lo) / (hi - lo) * 10.0).floor() as usize).min(9);
        let mut best = 1usize;
        let mut run = 1usize;
        for w in x.windows(2) {
            run = if bin(w[0]) == bin(w[1]) { run + 1 } else { 1 };
            best = best.max(run);
        }
        best as f64
    } else {
        n as f64
    };

    let mut longest = 0usize;
    let mut run = 0usize;
    for &v in x {
        run = if v > mu { run + 1 } else { 0 };
        longest = longest.max(run);
    }

    let coef_variation = if mu.abs() > 0.0 { sd / mu.abs() } else { 0.0 };
    let lambda = if x.iter().all(|&v| v > 0.0) {
        boxcox_lambda(x).unwrap_or(1.0)
    } else {
        1.0
    };
    let kpss = if sd > 0.0 { kpss_statistic(x) } else { 0.0 };
    let entropy = if sd > 0.0 { spectral_entropy(x) } else { 0.0 };

    let values = [
        n as f64,
        trend_strength,
        seasonal_strength,
        entropy,
        acf1,
        acf10,
        first_acf(&d1),
        first_acf(&d2),
        linearity,
        curvature,
        stability,
        lumpiness,
        crossing_points,
        flat_spots,
        longest as f64,
        coef_variation,
        lambda,
        max_level_shift(&scaled, width),
        kpss,
        if seasonal { 0.0 } else { 1.0 },
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite feature".into()));
    }
    Ok(FeatureVector { values })
}

/// Writes `series_id,<feature names>` rows.
pub fn format_feature_table(rows: &BTreeMap<String, FeatureVector>) -> String {
    let mut out = format!("series_id,{}\n", FEATURE_NAMES.join(","));
    for (id, fv) in rows {
        out.push_str(id);
        for v in fv.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_feature_table(text: &str) -> Result<BTreeMap<String, FeatureVector>> {
    let mut rows = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or_default().to_string();
        let vals = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        let values: [f64; N_FEATURES] = vals.try_into().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("expected {N_FEATURES} features"),
        })?;
        rows.insert(id, FeatureVector { values });
    }
    Ok(rows)
}
