//! Non-seasonal ARIMA: exact Gaussian likelihood via a Kalman filter,
//! CSS-then-ML estimation and stepwise AICc order search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::stats::{diff, ndiffs};

/// Smallest admissible modulus of AR and MA polynomial roots.
pub const ROOT_MARGIN: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }
}

/// Bounds for the stepwise search.
#[derive(Debug, Clone, Copy)]
pub struct StepwiseBounds {
    pub max_p: usize,
    pub max_q: usize,
    pub max_d: usize,
    pub max_order: usize,
    pub max_models: usize,
}

impl Default for StepwiseBounds {
    fn default() -> Self {
        Self {
            max_p: 5,
            max_q: 5,
            max_d: 2,
            max_order: 5,
            max_models: 94,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aicc: f64,
    /// Predicted state for the first out-of-sample step of the differenced series.
    state: Vec<f64>,
    /// Last observation at each differencing level `0..d`, used to integrate forecasts.
    tails: Vec<f64>,
}

/// Maps unconstrained reals onto the coefficients of a stationary AR polynomial
/// through partial autocorrelations.
fn pacf_transform(raw: &[f64]) -> Vec<f64> {
    let p = raw.len();
    let mut phi = vec![0.0; p];
    for k in 0..p {
        let a = 0.995 * raw[k].tanh();
        let prev = phi.clone();
        phi[k] = a;
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - j - 1];
        }
    }
    phi
}

/// Minimum modulus of the roots of `1 - c_1 z - ... - c_p z^p`.
pub fn min_root_modulus(coeffs: &[f64]) -> f64 {
    let p = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    if p == 0 {
        return f64::INFINITY;
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        companion[(0, j)] = coeffs[j];
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let max_eig = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if max_eig == 0.0 {
        f64::INFINITY
    } else {
        1.0 / max_eig
    }
}

/// Pulls roots outward until all have modulus ≥ [`ROOT_MARGIN`].
fn enforce_root_margin(coeffs: &mut [f64]) {
    for _ in 0..50 {
        if min_root_modulus(coeffs) >= ROOT_MARGIN * (1.0 + 1e-9) {
            return;
        }
        let mut r = 1.0;
        for c in coeffs.iter_mut() {
            r *= 0.99;
            *c *= r;
        }
    }
}

fn split_params(x: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let ar = pacf_transform(&x[..p]);
    let ma: Vec<f64> = pacf_transform(&x[p..]).into_iter().map(|c| -c).collect();
    (ar, ma)
}

/// Conditional sum of squares, conditioning on the first `p` observations.
fn css(w: &[f64], ar: &[f64], ma: &[f64]) -> (f64, usize) {
    let p = ar.len();
    let q = ma.len();
    let n = w.len();
    let mut e = vec![0.0; n];
    let mut ss = 0.0;
    for t in p..n {
        let mut pred = 0.0;
        for i in 0..p {
            pred += ar[i] * w[t - i - 1];
        }
        for j in 0..q {
            if t > j {
                pred += ma[j] * e[t - j - 1];
            }
        }
        e[t] = w[t] - pred;
        ss += e[t] * e[t];
    }
    (ss, n - p)
}

struct KalmanOutput {
    loglik: f64,
    sigma2: f64,
    state: Vec<f64>,
}

/// Exact Gaussian log-likelihood of a zero-mean ARMA process, σ² concentrated out.
fn kalman_loglik(w: &[f64], ar: &[f64], ma: &[f64]) -> Option<KalmanOutput> {
    let p = ar.len();
    let q = ma.len();
    let r = p.max(q + 1);
    let n = w.len();
    let mut t_mat = DMatrix::<f64>::zeros(r, r);
    for i in 0..p {
        t_mat[(i, 0)] = ar[i];
    }
    for i in 0..r - 1 {
        t_mat[(i, i + 1)] = 1.0;
    }
    let mut rv = DVector::<f64>::zeros(r);
    rv[0] = 1.0;
    for j in 0..q {
        rv[j + 1] = ma[j];
    }
    let rr = &rv * rv.transpose();

    // Stationary covariance: (I - T⊗T) vec(P) = vec(RR').
    let kron = t_mat.kronecker(&t_mat);
    let lhs = DMatrix::<f64>::identity(r * r, r * r) - kron;
    let rhs = DVector::from_iterator(r * r, rr.iter().copied());
    let vec_p = lhs.lu().solve(&rhs)?;
    let mut p_mat = DMatrix::from_iterator(r, r, vec_p.iter().copied());
    p_mat = (&p_mat + p_mat.transpose()) * 0.5;

    let mut a = DVector::<f64>::zeros(r);
    let mut sum_sq = 0.0;
    let mut sum_logf = 0.0;
    for &y in w {
        let f = p_mat[(0, 0)];
        if !(f > 0.0) || !f.is_finite() {
            return None;
        }
        let v = y - a[0];
        let k = p_mat.column(0) / f;
        let a_upd = &a + &k * v;
        let p_upd = &p_mat - &k * p_mat.row(0);
        a = &t_mat * a_upd;
        p_mat = &t_mat * p_upd * t_mat.transpose() + &rr;
        sum_sq += v * v / f;
        sum_logf += f.ln();
    }
    let nf = n as f64;
    let sigma2 = sum_sq / nf;
    if !(sigma2 > 0.0) {
        return None;
    }
    let loglik = -0.5 * (nf * (2.0 * std::f64::consts::PI * sigma2).ln() + sum_logf + nf);
    Some(KalmanOutput {
        loglik,
        sigma2,
        state: a.iter().copied().collect(),
    })
}

fn aicc(loglik: f64, npar: usize, nobs: usize) -> f64 {
    let k = npar as f64;
    if nobs <= npar + 1 {
        return f64::INFINITY;
    }
    -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (nobs as f64 - k - 1.0)
}

impl ArimaFit {
    /// Fits ARIMA(p, d, q) without a mean term by CSS followed by exact ML.
    pub fn fit(y: &[f64], order: ArimaOrder) -> Result<Self> {
        let ArimaOrder { p, d, q } = order;
        let mut tails = Vec::with_capacity(d);
        let mut w = y.to_vec();
        for _ in 0..d {
            tails.push(*w.last().ok_or_else(|| Error::Numerical("empty series".into()))?);
            w = diff(&w, 1);
        }
        if w.len() < p + q + 3 {
            return Err(Error::SeriesTooShort {
                what: "ARIMA fit",
                needed: p + q + 3 + d,
                got: y.len(),
            });
        }
        let opts = NelderMeadOptions::default();
        let x0 = vec![0.0; p + q];
        let start = if p + q > 0 {
            let css_fit = nelder_mead(
                |x| {
                    let (ar, ma) = split_params(x, p);
                    let (ss, m) = css(&w, &ar, &ma);
                    0.5 * (ss / m as f64).ln()
                },
                &x0,
                opts,
            );
            css_fit.x
        } else {
            x0
        };
        let ml = nelder_mead(
            |x| {
                let (ar, ma) = split_params(x, p);
                kalman_loglik(&w, &ar, &ma).map_or(f64::INFINITY, |k| -k.loglik)
            },
            &start,
            opts,
        );
        let (mut ar, mut ma) = split_params(&ml.x, p);
        enforce_root_margin(&mut ar);
        let mut neg_ma: Vec<f64> = ma.iter().map(|c| -c).collect();
        enforce_root_margin(&mut neg_ma);
        ma = neg_ma.iter().map(|c| -c).collect();
        let out = kalman_loglik(&w, &ar, &ma)
            .ok_or_else(|| Error::Numerical(format!("ARIMA{order:?} likelihood failed")))?;
        Ok(Self {
            order,
            ar,
            ma,
            sigma2: out.sigma2,
            loglik: out.loglik,
            aicc: aicc(out.loglik, p + q + 1, w.len()),
            state: out.state,
            tails,
        })
    }

    /// Builds a model from given coefficients and filters `y` through it.
    pub fn from_coefficients(y: &[f64], d: usize, ar: Vec<f64>, ma: Vec<f64>) -> Result<Self> {
        let mut tails = Vec::with_capacity(d);
        let mut w = y.to_vec();
        for _ in 0..d {
            tails.push(*w.last().ok_or_else(|| Error::Numerical("empty series".into()))?);
            w = diff(&w, 1);
        }
        let out = kalman_loglik(&w, &ar, &ma)
            .ok_or_else(|| Error::Numerical("ARMA likelihood failed".into()))?;
        let order = ArimaOrder::new(ar.len(), d, ma.len());
        Ok(Self {
            order,
            aicc: aicc(out.loglik, ar.len() + ma.len() + 1, w.len()),
            ar,
            ma,
            sigma2: out.sigma2,
            loglik: out.loglik,
            state: out.state,
            tails,
        })
    }

    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let r = self.state.len();
        let mut a = self.state.clone();
        let mut w = Vec::with_capacity(h);
        for _ in 0..h {
            w.push(a[0]);
            let mut next = vec![0.0; r];
            for i in 0..r {
                let ar_i = self.ar.get(i).copied().unwrap_or(0.0);
                next[i] = ar_i * a[0] + if i + 1 < r { a[i + 1] } else { 0.0 };
            }
            a = next;
        }
        // Integrate back through each differencing level, innermost first.
        for &last in self.tails.iter().rev() {
            let mut level = last;
            for v in w.iter_mut() {
                level += *v;
                *v = level;
            }
        }
        w
    }

    pub fn min_ar_root(&self) -> f64 {
        min_root_modulus(&self.ar)
    }

    pub fn min_ma_root(&self) -> f64 {
        let neg: Vec<f64> = self.ma.iter().map(|c| -c).collect();
        min_root_modulus(&neg)
    }
}

/// Hyndman-Khandakar style stepwise search: `d` by repeated KPSS tests, then
/// neighbourhood moves in `(p, q)` from the best of four starting models
/// until AICc stops improving.
pub fn auto_arima(y: &[f64], bounds: StepwiseBounds) -> Result<ArimaFit> {
    let d = ndiffs(y, bounds.max_d);
    let nobs = y.len() - d;
    // Keep enough degrees of freedom for the AICc correction.
    let cap = |v: usize| v.min(nobs.saturating_sub(4) / 2);
    let max_p = cap(bounds.max_p);
    let max_q = cap(bounds.max_q);

    let admissible = |p: usize, q: usize| p <= max_p && q <= max_q && p + q <= bounds.max_order;
    let mut tried: Vec<(usize, usize)> = Vec::new();
    let mut best: Option<ArimaFit> = None;
    let mut try_order = |p: usize, q: usize, best: &mut Option<ArimaFit>| -> bool {
        if !admissible(p, q) || tried.contains(&(p, q)) || tried.len() >= bounds.max_models {
            return false;
        }
        tried.push((p, q));
        match ArimaFit::fit(y, ArimaOrder::new(p, d, q)) {
            Ok(fit) if fit.aicc.is_finite() => {
                let better = best.as_ref().is_none_or(|b| fit.aicc < b.aicc - 1e-9);
                if better {
                    *best = Some(fit);
                }
                better
            }
            _ => false,
        }
    };

    for (p, q) in [(2, 2), (0, 0), (1, 0), (0, 1)] {
        try_order(p.min(max_p), q.min(max_q), &mut best);
    }
    loop {
        let Some(cur) = best.as_ref().map(|b| b.order) else {
            break;
        };
        let (p, q) = (cur.p as i64, cur.q as i64);
        let moves = [
            (p - 1, q),
            (p + 1, q),
            (p, q - 1),
            (p, q + 1),
            (p - 1, q - 1),
            (p + 1, q + 1),
            (p - 1, q + 1),
            (p + 1, q - 1),
        ];
        let mut improved = false;
        for (np, nq) in moves {
            if np < 0 || nq < 0 {
                continue;
            }
            if try_order(np as usize, nq as usize, &mut best) {
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    best.ok_or_else(|| Error::Numerical("no ARIMA model could be fitted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![0.0; n];
        let mut prev = 0.0;
        for v in y.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            prev = phi * prev + e;
            *v = prev;
        }
        y
    }

    #[test]
    fn transform_is_stationary() {
        let phi = pacf_transform(&[3.0, -2.0, 5.0, 0.3]);
        assert!(min_root_modulus(&phi) > 1.0);
    }

    #[test]
    fn recovers_ar1() {
        let y = ar1(0.7, 400, 11);
        let fit = ArimaFit::fit(&y, ArimaOrder::new(1, 0, 0)).unwrap();
        assert!((fit.ar[0] - 0.7).abs() < 0.1, "{:?}", fit.ar);
        assert!((fit.sigma2 - 1.0).abs() < 0.2);
    }

    #[test]
    fn ar1_forecast_decays() {
        let y = [0.3, -0.2, 1.0, 0.4, 2.0];
        let fit = ArimaFit::from_coefficients(&y, 0, vec![0.5], vec![]).unwrap();
        let f = fit.forecast(4);
        for (j, v) in f.iter().enumerate() {
            assert!((v - 0.5f64.powi(j as i32 + 1) * 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stepwise_finds_ar_structure() {
        let y = ar1(0.8, 200, 5);
        let fit = auto_arima(&y, StepwiseBounds::default()).unwrap();
        assert!(fit.order.p >= 1 || fit.order.d >= 1, "{:?}", fit.order);
        assert!(fit.min_ar_root() > ROOT_MARGIN);
        assert!(fit.min_ma_root() > ROOT_MARGIN);
    }

    #[test]
    fn random_walk_differenced() {
        let mut y = ar1(0.0, 200, 9);
        for i in 1..y.len() {
            y[i] += y[i - 1];
        }
        let fit = auto_arima(&y, StepwiseBounds::default()).unwrap();
        assert_eq!(fit.order.d, 1);
        let f = fit.forecast(3);
        assert!(f.iter().all(|v| v.is_finite()));
    }
}
