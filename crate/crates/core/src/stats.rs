//! Small statistical helpers shared by the models and the feature extractor.

use nalgebra::{DMatrix, DVector};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divides by `n`).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Sample variance (divides by `n - 1`).
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn diff(x: &[f64], lag: usize) -> Vec<f64> {
    if x.len() <= lag {
        return Vec::new();
    }
    (lag..x.len()).map(|i| x[i] - x[i - lag]).collect()
}

/// Biased sample autocovariances for lags `0..=max_lag`.
pub fn autocovariance(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    (0..=max_lag)
        .map(|k| {
            if k >= n {
                0.0
            } else {
                (k..n).map(|t| (x[t] - m) * (x[t - k] - m)).sum::<f64>() / n as f64
            }
        })
        .collect()
}

/// Sample autocorrelations for lags `1..=max_lag`; zeros for a constant series.
pub fn acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let g = autocovariance(x, max_lag);
    if g[0] <= 0.0 {
        return vec![0.0; max_lag];
    }
    g[1..].iter().map(|v| v / g[0]).collect()
}

/// Least squares fit of `y` on the columns of `x`. Returns `None` when the
/// design is numerically rank-deficient.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    if x.nrows() < x.ncols() {
        return None;
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-10 {
        return None;
    }
    svd.solve(y, 0.0).ok()
}

/// Level-stationarity KPSS statistic with Bartlett long-run variance and
/// `trunc(4 (n/100)^0.25)` lags.
pub fn kpss_statistic(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 3 {
        return 0.0;
    }
    let m = mean(x);
    let e: Vec<f64> = x.iter().map(|v| v - m).collect();
    let mut s = 0.0;
    let eta: f64 = e
        .iter()
        .map(|v| {
            s += v;
            s * s
        })
        .sum::<f64>()
        / (n as f64).powi(2);
    let lags = (4.0 * (n as f64 / 100.0).powf(0.25)).trunc() as usize;
    let mut lrv = e.iter().map(|v| v * v).sum::<f64>() / n as f64;
    for l in 1..=lags.min(n - 1) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let g = (l..n).map(|t| e[t] * e[t - l]).sum::<f64>() / n as f64;
        lrv += 2.0 * w * g;
    }
    if lrv <= 0.0 {
        return 0.0;
    }
    eta / lrv
}

/// 5% critical value of the level-stationarity KPSS test.
pub const KPSS_CRITICAL_5PCT: f64 = 0.463;

/// Number of differences (≤ `max_d`) suggested by repeated KPSS tests.
pub fn ndiffs(x: &[f64], max_d: usize) -> usize {
    let mut cur = x.to_vec();
    let mut d = 0;
    while d < max_d {
        if cur.len() < 5 || variance(&cur) < 1e-12 || kpss_statistic(&cur) <= KPSS_CRITICAL_5PCT {
            break;
        }
        cur = diff(&cur, 1);
        d += 1;
    }
    d
}

/// Durbin-Levinson recursion. Given autocovariances `gamma[0..=p]`, returns
/// the AR(p) coefficients, the partial autocorrelations and the innovation
/// variance of every order `0..=p`.
pub fn durbin_levinson(gamma: &[f64], p: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut phi = vec![0.0; p];
    let mut pacf = vec![0.0; p];
    let mut v = vec![gamma[0]; p + 1];
    for k in 1..=p {
        if v[k - 1] <= 0.0 {
            v[k] = v[k - 1];
            continue;
        }
        let num = gamma[k] - (1..k).map(|j| phi[j - 1] * gamma[k - j]).sum::<f64>();
        let a = num / v[k - 1];
        let prev = phi.clone();
        phi[k - 1] = a;
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - a * prev[k - j - 1];
        }
        pacf[k - 1] = a;
        v[k] = v[k - 1] * (1.0 - a * a);
    }
    (phi, pacf, v)
}

/// Yule-Walker autoregression with order chosen by AIC up to `max_order`.
pub fn yule_walker_aic(x: &[f64], max_order: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    let max_order = max_order.min(n.saturating_sub(1));
    let gamma = autocovariance(x, max_order);
    let (_, _, v) = durbin_levinson(&gamma, max_order);
    let mut best = (0, f64::INFINITY);
    for (p, vp) in v.iter().enumerate() {
        if *vp <= 0.0 {
            break;
        }
        let aic = n as f64 * vp.ln() + 2.0 * p as f64;
        if aic < best.1 - 1e-12 {
            best = (p, aic);
        }
    }
    let (phi, _, v) = durbin_levinson(&gamma, best.0);
    (phi, v[best.0].max(0.0))
}

/// Ordinary least-squares slope and intercept of `y` against `t = 0..n`.
pub fn linear_trend(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let tbar = (n - 1.0) / 2.0;
    let ybar = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, v) in y.iter().enumerate() {
        let dt = t as f64 - tbar;
        sxy += dt * (v - ybar);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ybar - slope * tbar, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn durbin_levinson_ar1() {
        // AR(1) with phi = 0.6 and unit innovations: gamma_k = 0.6^k / 0.64.
        let gamma: Vec<f64> = (0..4).map(|k| 0.6f64.powi(k) / 0.64).collect();
        let (phi, pacf, v) = durbin_levinson(&gamma, 3);
        assert!((phi[0] - 0.6).abs() < 1e-12 && phi[1].abs() < 1e-12);
        assert!(pacf[1].abs() < 1e-12);
        assert!((v[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kpss_separates_random_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
        let mut walk = noise.clone();
        for i in 1..walk.len() {
            walk[i] += walk[i - 1];
        }
        assert!(kpss_statistic(&noise) < KPSS_CRITICAL_5PCT);
        assert!(kpss_statistic(&walk) > KPSS_CRITICAL_5PCT);
        assert_eq!(ndiffs(&noise, 2), 0);
        assert_eq!(ndiffs(&walk, 2), 1);
    }

    #[test]
    fn trend_of_line() {
        let y: Vec<f64> = (0..10).map(|t| 3.0 + 2.0 * t as f64).collect();
        let (a, b) = linear_trend(&y);
        assert!((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_detected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(least_squares(&x, &DVector::from_vec(vec![1.0, 2.0, 3.0])).is_none());
    }
}
