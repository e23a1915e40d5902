//! Trigonometric seasonal exponential smoothing with Box-Cox, trend, damping
//! and ARMA errors, chosen by AIC over a lattice of alternatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::{boxcox, boxcox_lambda, inv_boxcox};

use super::arima::{auto_arima, StepwiseBounds};

/// Candidate numbers of harmonics.
pub const TBATS_K_CANDIDATES: [usize; 6] = [1, 2, 3, 5, 7, 10];
/// Largest AR / MA order considered for the error process.
pub const TBATS_MAX_ARMA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbatsStructure {
    pub boxcox: bool,
    pub trend: bool,
    pub damped: bool,
    pub k: usize,
    pub p: usize,
    pub q: usize,
}

impl TbatsStructure {
    fn state_dim(&self) -> usize {
        1 + usize::from(self.trend) + 2 * self.k + self.p + self.q
    }

    fn seed_dim(&self) -> usize {
        1 + usize::from(self.trend) + 2 * self.k
    }

    fn param_count(&self) -> usize {
        1 + if self.trend { 1 + usize::from(self.damped) } else { 0 }
            + 2
            + self.p
            + self.q
            + usize::from(self.boxcox)
    }
}

/// Smoothing and ARMA parameters of one TBATS structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbatsParams {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub structure: TbatsStructure,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbatsModel {
    pub lambda: Option<f64>,
    pub structure: TbatsStructure,
    pub params: TbatsParams,
    pub period: f64,
    /// State after the last observation: level, trend, 2k seasonal, ARMA lags.
    pub state: Vec<f64>,
    pub aic: f64,
    /// Every candidate evaluated during selection.
    pub candidates: Vec<CandidateScore>,
}

/// Dense linear system of one structure/parameter combination:
/// `ŷ_t = w'x_{t-1}`, `x_t = F x_{t-1} + g e_t`.
struct System {
    dim: usize,
    w: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl System {
    fn new(s: &TbatsStructure, p: &TbatsParams, period: f64) -> Self {
        let dim = s.state_dim();
        let phi = if s.trend && s.damped { p.phi } else { 1.0 };
        let mut w = vec![0.0; dim];
        let mut f = vec![0.0; dim * dim];
        let mut g = vec![0.0; dim];
        let at = |r: usize, c: usize| r * dim + c;

        let lvl = 0;
        let trd = 1;
        let seas = 1 + usize::from(s.trend);
        let dl = seas + 2 * s.k;
        let el = dl + s.p;

        // Part of d_t known before e_t, as a row over the state.
        let mut arma_row = vec![0.0; dim];
        for i in 0..s.p {
            arma_row[dl + i] = p.ar[i];
        }
        for j in 0..s.q {
            arma_row[el + j] = p.ma[j];
        }

        w[lvl] = 1.0;
        if s.trend {
            w[trd] = phi;
        }
        for j in 0..s.k {
            w[seas + j] = 1.0;
        }
        for c in 0..dim {
            w[c] += arma_row[c];
        }

        // Level.
        f[at(lvl, lvl)] = 1.0;
        if s.trend {
            f[at(lvl, trd)] = phi;
        }
        for c in 0..dim {
            f[at(lvl, c)] += p.alpha * arma_row[c];
        }
        g[lvl] = p.alpha;
        // Trend.
        if s.trend {
            f[at(trd, trd)] = phi;
            for c in 0..dim {
                f[at(trd, c)] += p.beta * arma_row[c];
            }
            g[trd] = p.beta;
        }
        // Trigonometric seasonal pairs.
        for j in 0..s.k {
            let lam = std::f64::consts::TAU * (j + 1) as f64 / period;
            let (sn, cs) = lam.sin_cos();
            let a = seas + j;
            let b = seas + s.k + j;
            f[at(a, a)] = cs;
            f[at(a, b)] = sn;
            f[at(b, a)] = -sn;
            f[at(b, b)] = cs;
            for c in 0..dim {
                f[at(a, c)] += p.gamma1 * arma_row[c];
                f[at(b, c)] += p.gamma2 * arma_row[c];
            }
            g[a] = p.gamma1;
            g[b] = p.gamma2;
        }
        // ARMA lag registers.
        if s.p > 0 {
            for c in 0..dim {
                f[at(dl, c)] = arma_row[c];
            }
            g[dl] = 1.0;
            for i in 1..s.p {
                f[at(dl + i, dl + i - 1)] = 1.0;
            }
        }
        if s.q > 0 {
            g[el] = 1.0;
            for j in 1..s.q {
                f[at(el + j, el + j - 1)] = 1.0;
            }
        }
        Self { dim, w, f, g }
    }

    /// `D = F - g w'`.
    fn discount(&self) -> Vec<f64> {
        let n = self.dim;
        let mut d = self.f.clone();
        for r in 0..n {
            for c in 0..n {
                d[r * n + c] -= self.g[r] * self.w[c];
            }
        }
        d
    }

    fn step(&self, x: &[f64], e: f64, out: &mut [f64]) {
        let n = self.dim;
        for r in 0..n {
            let row = &self.f[r * n..(r + 1) * n];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.g[r] * e;
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

fn spectral_radius(mat: &[f64], n: usize) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(n, n, mat);
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residuals for zero seeds plus the seed-state regression rows `w'D^{t-1}`.
struct SeedFit {
    seeds: Vec<f64>,
    sse: f64,
}

fn fit_seeds(sys: &System, seed_dim: usize, z: &[f64]) -> Option<SeedFit> {
    let n = sys.dim;
    let d = sys.discount();
    if spectral_radius(&d, n) >= 1.0 + 1e-2 {
        return None;
    }
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut v: Vec<f64> = sys.w[..seed_dim].to_vec();
    let mut v_full = sys.w.clone();
    let mut vnext = vec![0.0; n];
    // Normal equations of e0 ≈ V s.
    let mut ata = vec![0.0; seed_dim * seed_dim];
    let mut atb = vec![0.0; seed_dim];
    let mut e0 = Vec::with_capacity(z.len());
    for &y in z {
        let e = y - sys.predict(&x);
        sys.step(&x, e, &mut next);
        std::mem::swap(&mut x, &mut next);
        e0.push(e);
        for r in 0..seed_dim {
            atb[r] += v[r] * e;
            for c in 0..seed_dim {
                ata[r * seed_dim + c] += v[r] * v[c];
            }
        }
        // v_{t+1} = v_t D over the full state; seeds only use the leading block.
        for c in 0..n {
            let mut acc = 0.0;
            for r in 0..n {
                acc += v_full[r] * d[r * n + c];
            }
            vnext[c] = acc;
        }
        std::mem::swap(&mut v_full, &mut vnext);
        v.copy_from_slice(&v_full[..seed_dim]);
        if v.iter().any(|a| !a.is_finite() || a.abs() > 1e8) {
            return None;
        }
    }
    let a = nalgebra::DMatrix::from_row_slice(seed_dim, seed_dim, &ata);
    let b = nalgebra::DVector::from_column_slice(&atb);
    let scale = (0..seed_dim).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-12);
    let ridge = a + nalgebra::DMatrix::identity(seed_dim, seed_dim) * (scale * 1e-10);
    let seeds = ridge.cholesky()?.solve(&b);
    // SSE = ‖e0‖² − 2 s'A'e0 + s'A'A s with the normal-equation matrices.
    let e0e0: f64 = e0.iter().map(|e| e * e).sum();
    let s_atb: f64 = seeds.iter().zip(&atb).map(|(s, b)| s * b).sum();
    let sse = (e0e0 - s_atb).max(0.0);
    let _ = &e0;
    Some(SeedFit {
        seeds: seeds.iter().copied().collect(),
        sse,
    })
}

fn unpack(s: &TbatsStructure, x: &[f64]) -> Option<TbatsParams> {
    let mut it = x.iter().copied();
    let alpha = it.next()?;
    let (beta, phi) = if s.trend {
        let b = it.next()?;
        let ph = if s.damped { it.next()? } else { 1.0 };
        (b, ph)
    } else {
        (0.0, 1.0)
    };
    let gamma1 = it.next()?;
    let gamma2 = it.next()?;
    let ar: Vec<f64> = (0..s.p).map(|_| it.next()).collect::<Option<_>>()?;
    let ma: Vec<f64> = (0..s.q).map(|_| it.next()).collect::<Option<_>>()?;
    let ok = (0.0..=1.0).contains(&alpha)
        && (0.0..=1.0).contains(&beta)
        && (0.8..=1.0).contains(&phi)
        && gamma1.abs() <= 0.5
        && gamma2.abs() <= 0.5;
    ok.then_some(TbatsParams {
        alpha,
        beta,
        phi,
        gamma1,
        gamma2,
        ar,
        ma,
    })
}

fn initial_vector(s: &TbatsStructure, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let mut x = vec![0.09];
    if s.trend {
        x.push(0.05);
        if s.damped {
            x.push(0.97);
        }
    }
    x.push(0.001);
    x.push(0.001);
    x.extend(ar.iter().take(s.p));
    x.extend(std::iter::repeat_n(0.0, s.p.saturating_sub(ar.len())));
    x.extend(ma.iter().take(s.q));
    x.extend(std::iter::repeat_n(0.0, s.q.saturating_sub(ma.len())));
    x
}

struct CandidateFit {
    structure: TbatsStructure,
    params: TbatsParams,
    seeds: Vec<f64>,
    aic: f64,
}

fn fit_structure(
    s: TbatsStructure,
    z: &[f64],
    jacobian: f64,
    lambda: Option<f64>,
    period: f64,
    ar0: &[f64],
    ma0: &[f64],
) -> Option<CandidateFit> {
    let n = z.len() as f64;
    let objective = |x: &[f64]| -> f64 {
        let Some(p) = unpack(&s, x) else {
            return f64::INFINITY;
        };
        let sys = System::new(&s, &p, period);
        match fit_seeds(&sys, s.seed_dim(), z) {
            Some(fit) if fit.sse > 0.0 => n * fit.sse.ln(),
            Some(_) => -1e12,
            None => f64::INFINITY,
        }
    };
    let x0 = initial_vector(&s, ar0, ma0);
    let opts = NelderMeadOptions {
        initial_step: 0.05,
        ..Default::default()
    };
    let min = nelder_mead(objective, &x0, opts);
    if !min.value.is_finite() {
        return None;
    }
    let params = unpack(&s, &min.x)?;
    let sys = System::new(&s, &params, period);
    let seeds = fit_seeds(&sys, s.seed_dim(), z)?.seeds;
    let _ = lambda;
    let likelihood = min.value - 2.0 * jacobian;
    let aic = likelihood + 2.0 * (s.param_count() + s.seed_dim()) as f64;
    Some(CandidateFit {
        structure: s,
        params,
        seeds,
        aic,
    })
}

impl TbatsModel {
    /// Fits every admissible structure with ARMA(0,0) errors, then tries ARMA
    /// errors on the AIC-best structure, with orders suggested by a stepwise
    /// search on its residuals.
    pub fn fit(y: &[f64], period: f64) -> Result<Self> {
        if y.len() < 8 {
            return Err(Error::SeriesTooShort {
                what: "TBATS",
                needed: 8,
                got: y.len(),
            });
        }
        let positive = y.iter().all(|v| *v > 0.0);
        let lambda_bc = if positive { boxcox_lambda(y).ok() } else { None };
        let log_sum: f64 = if positive { y.iter().map(|v| v.ln()).sum() } else { 0.0 };

        let mut fits: Vec<(CandidateFit, Option<f64>)> = Vec::new();
        let mut transforms: Vec<(bool, Option<f64>)> = vec![(false, None)];
        if let Some(l) = lambda_bc {
            if l != 1.0 {
                transforms.push((true, Some(l)));
            }
        }
        for &(bc, lambda) in &transforms {
            let z = match lambda {
                Some(l) => boxcox(y, l)?,
                None => y.to_vec(),
            };
            let jac = lambda.map_or(0.0, |l| (l - 1.0) * log_sum);
            for (trend, damped) in [(false, false), (true, false), (true, true)] {
                for &k in &TBATS_K_CANDIDATES {
                    if (2 * k) as f64 >= period {
                        continue;
                    }
                    let s = TbatsStructure {
                        boxcox: bc,
                        trend,
                        damped,
                        k,
                        p: 0,
                        q: 0,
                    };
                    if s.seed_dim() + s.param_count() + 2 >= y.len() {
                        continue;
                    }
                    if let Some(fit) = fit_structure(s, &z, jac, lambda, period, &[], &[]) {
                        fits.push((fit, lambda));
                    }
                }
            }
        }
        let best_idx = argmin_aic(&fits).ok_or_else(|| {
            Error::Numerical(format!(
                "TBATS: no candidate structure could be fitted ({} points)",
                y.len()
            ))
        })?;

        // ARMA errors for the incumbent structure.
        let (base, lambda) = (&fits[best_idx].0, fits[best_idx].1);
        let z = match lambda {
            Some(l) => boxcox(y, l)?,
            None => y.to_vec(),
        };
        let resid = residuals(&base.structure, &base.params, &base.seeds, &z, period);
        let bounds = StepwiseBounds {
            max_p: TBATS_MAX_ARMA,
            max_q: TBATS_MAX_ARMA,
            max_d: 0,
            max_order: 2 * TBATS_MAX_ARMA,
            max_models: 94,
        };
        if let Ok(arma) = auto_arima(&resid, bounds) {
            if arma.order.p + arma.order.q > 0 {
                let s = TbatsStructure {
                    p: arma.order.p,
                    q: arma.order.q,
                    ..base.structure
                };
                let jac = lambda.map_or(0.0, |l| (l - 1.0) * log_sum);
                if s.seed_dim() + s.param_count() + 2 < y.len() {
                    if let Some(fit) = fit_structure(s, &z, jac, lambda, period, &arma.ar, &arma.ma) {
                        fits.push((fit, lambda));
                    }
                }
            }
        }

        let best_idx = argmin_aic(&fits).expect("at least one candidate");
        let candidates = fits
            .iter()
            .map(|(f, _)| CandidateScore {
                structure: f.structure,
                aic: f.aic,
            })
            .collect();
        let (best, lambda) = fits.swap_remove(best_idx);
        let z = match lambda {
            Some(l) => boxcox(y, l)?,
            None => y.to_vec(),
        };
        let state = final_state(&best.structure, &best.params, &best.seeds, &z, period);
        Ok(Self {
            lambda,
            structure: best.structure,
            params: best.params,
            period,
            state,
            aic: best.aic,
            candidates,
        })
    }

    /// Iterates the state recursion with zero innovations.
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let sys = System::new(&self.structure, &self.params, self.period);
        let mut x = self.state.clone();
        let mut next = vec![0.0; sys.dim];
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            out.push(sys.predict(&x));
            sys.step(&x, 0.0, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
        match self.lambda {
            Some(l) => inv_boxcox(&out, l),
            None => out,
        }
    }

    /// Builds a model directly from its parts; used for inspection and tests.
    pub fn from_parts(
        lambda: Option<f64>,
        structure: TbatsStructure,
        params: TbatsParams,
        period: f64,
        state: Vec<f64>,
    ) -> Result<Self> {
        if state.len() != structure.state_dim() {
            return Err(Error::InvalidInput(format!(
                "TBATS state has {} entries, structure needs {}",
                state.len(),
                structure.state_dim()
            )));
        }
        Ok(Self {
            lambda,
            structure,
            params,
            period,
            state,
            aic: f64::NAN,
            candidates: Vec::new(),
        })
    }
}

fn argmin_aic(fits: &[(CandidateFit, Option<f64>)]) -> Option<usize> {
    fits.iter()
        .enumerate()
        .filter(|(_, (f, _))| f.aic.is_finite())
        .min_by(|a, b| a.1 .0.aic.total_cmp(&b.1 .0.aic))
        .map(|(i, _)| i)
}

fn seeded_state(s: &TbatsStructure, seeds: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; s.state_dim()];
    x[..seeds.len()].copy_from_slice(seeds);
    x
}

fn residuals(s: &TbatsStructure, p: &TbatsParams, seeds: &[f64], z: &[f64], period: f64) -> Vec<f64> {
    let sys = System::new(s, p, period);
    let mut x = seeded_state(s, seeds);
    let mut next = vec![0.0; sys.dim];
    z.iter()
        .map(|&y| {
            let e = y - sys.predict(&x);
            sys.step(&x, e, &mut next);
            std::mem::swap(&mut x, &mut next);
            e
        })
        .collect()
}

fn final_state(s: &TbatsStructure, p: &TbatsParams, seeds: &[f64], z: &[f64], period: f64) -> Vec<f64> {
    let sys = System::new(s, p, period);
    let mut x = seeded_state(s, seeds);
    let mut next = vec![0.0; sys.dim];
    for &y in z {
        let e = y - sys.predict(&x);
        sys.step(&x, e, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    x
}

pub fn tbats_fit(y: &[f64], period: f64) -> Result<TbatsModel> {
    TbatsModel::fit(y, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::{smape, SmapeVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn params(alpha: f64, beta: f64, phi: f64) -> TbatsParams {
        TbatsParams {
            alpha,
            beta,
            phi,
            gamma1: 0.0,
            gamma2: 0.0,
            ar: vec![],
            ma: vec![],
        }
    }

    #[test]
    fn continues_sinusoid() {
        let period = 52.18;
        let f = |t: usize| 20.0 + 5.0 * (std::f64::consts::TAU * t as f64 / period).sin();
        let y: Vec<f64> = (0..157).map(f).collect();
        let m = TbatsModel::fit(&y, period).unwrap();
        let truth: Vec<f64> = (157..170).map(f).collect();
        let err = smape(&m.forecast(13), &truth, SmapeVariant::Standard).unwrap();
        assert!(err < 2.0, "sMAPE {err}, structure {:?}", m.structure);
    }

    #[test]
    fn white_noise_has_no_trend() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = (0..100)
            .map(|_| 10.0 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let m = TbatsModel::fit(&y, 52.18).unwrap();
        assert!(!m.structure.trend, "{:?}", m.structure);
        let sd = crate::stats::sample_variance(&y).sqrt();
        for v in m.forecast(8) {
            assert!((v - 10.0).abs() < sd, "{v}");
        }
    }

    #[test]
    fn aic_is_minimal_over_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<f64> = (0..90)
            .map(|t| 50.0 + 0.2 * t as f64 + 3.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let m = TbatsModel::fit(&y, 52.18).unwrap();
        assert!(m.candidates.len() > 1);
        assert!(m.candidates.iter().all(|c| m.aic <= c.aic));
    }

    #[test]
    fn damped_trend_forecast() {
        let s = TbatsStructure {
            boxcox: false,
            trend: true,
            damped: true,
            k: 1,
            p: 0,
            q: 0,
        };
        let phi = 0.9;
        let m = TbatsModel::from_parts(None, s, params(0.2, 0.1, phi), 52.18, vec![10.0, 2.0, 0.0, 0.0]).unwrap();
        let f = m.forecast(5);
        let mut cum = 0.0;
        for (j, v) in f.iter().enumerate() {
            cum += phi.powi(j as i32 + 1);
            assert!((v - (10.0 + 2.0 * cum)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_when_no_trend_or_season() {
        let s = TbatsStructure {
            boxcox: false,
            trend: false,
            damped: false,
            k: 2,
            p: 0,
            q: 0,
        };
        let m = TbatsModel::from_parts(None, s, params(0.3, 0.0, 1.0), 52.18, vec![7.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(m.forecast(20).iter().all(|v| (v - 7.5).abs() < 1e-12));
    }

    #[test]
    fn log_model_stays_positive() {
        let y: Vec<f64> = (0..80).map(|t| (t as f64 / 8.0).sin().exp()).collect();
        let mut m = TbatsModel::fit(&y, 52.18).unwrap();
        m.lambda = Some(0.0);
        assert!(m.forecast(60).iter().all(|v| *v > 0.0));
    }

    #[test]
    fn too_short() {
        assert!(TbatsModel::fit(&[1.0; 7], 52.18).is_err());
    }
}
