//! Globally trained stacked LSTM: one parameter set is fitted on moving
//! windows pooled from every series of a dataset.

pub mod lstm;
pub mod optimizer;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use lstm::LstmStack;
pub use optimizer::{Adam, Cocob, OptimizerKind, COCOB_ALPHA};
use optimizer::Optimizer;

use crate::error::{Error, Result};
use crate::eval::metrics::{smape, SmapeVariant};
use crate::series::{fourier_terms, FourierSpec, WEEKLY_PERIOD_REAL};

pub const LOG_FLOOR: f64 = 1e-6;
pub const LAG_WINDOW: usize = 53;
pub const FOURIER_PAIRS: usize = 5;
pub const ADAM_LEARNING_RATE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalityMode {
    #[default]
    FourierCovariates,
    SeasonalLagWindow,
}

impl std::str::FromStr for SeasonalityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fourier_covariates" => Ok(SeasonalityMode::FourierCovariates),
            "seasonal_lag_window" => Ok(SeasonalityMode::SeasonalLagWindow),
            other => Err(Error::InvalidInput(format!("unknown seasonality mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnnConfig {
    pub cell_dimension: usize,
    pub mini_batch_size: usize,
    pub max_epochs: usize,
    pub epoch_size: usize,
    pub num_hidden_layers: usize,
    pub l2_weight: f64,
    pub init_stddev: f64,
    pub noise_stddev: f64,
    pub input_window: usize,
    pub output_window: usize,
    pub seasonality_mode: SeasonalityMode,
    pub optimizer: OptimizerKind,
}

impl RnnConfig {
    /// Mid-range defaults for horizon `h`.
    pub fn for_horizon(h: usize, mode: SeasonalityMode) -> Self {
        Self {
            cell_dimension: 32,
            mini_batch_size: 32,
            max_epochs: 15,
            epoch_size: 5,
            num_hidden_layers: 1,
            l2_weight: 1e-4,
            init_stddev: 0.05,
            noise_stddev: 1e-3,
            input_window: default_input_window(h, mode),
            output_window: h,
            seasonality_mode: mode,
            optimizer: OptimizerKind::Cocob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("cell_dimension", self.cell_dimension),
            ("mini_batch_size", self.mini_batch_size),
            ("max_epochs", self.max_epochs),
            ("epoch_size", self.epoch_size),
            ("num_hidden_layers", self.num_hidden_layers),
            ("input_window", self.input_window),
            ("output_window", self.output_window),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if !(self.init_stddev > 0.0) {
            return Err(Error::config("init_stddev", "must be positive"));
        }
        if !(self.noise_stddev > 0.0) {
            return Err(Error::config("noise_stddev", "must be positive"));
        }
        if !(self.l2_weight >= 0.0) {
            return Err(Error::config("l2_weight", "must be non-negative"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self.seasonality_mode {
            SeasonalityMode::FourierCovariates => 1 + 2 * FOURIER_PAIRS,
            SeasonalityMode::SeasonalLagWindow => 1,
        }
    }
}

pub fn default_input_window(h: usize, mode: SeasonalityMode) -> usize {
    match mode {
        SeasonalityMode::SeasonalLagWindow => LAG_WINDOW,
        SeasonalityMode::FourierCovariates => (5 * h).div_ceil(4),
    }
}

/// Mean-normalises and logs a series; returns the transformed values and
/// the mean used.
pub fn rnn_preprocess(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    if series.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::InvalidInput(format!(
            "series mean must be positive for the RNN, got {mean}"
        )));
    }
    Ok((series.iter().map(|&y| (y / mean).max(LOG_FLOOR).ln()).collect(), mean))
}

pub fn rnn_postprocess(z: &[f64], mean: f64) -> Vec<f64> {
    z.iter().map(|&v| (mean * v.exp()).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedInstance {
    pub series: usize,
    /// `input_window` steps of `input_dim` values.
    pub input: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub padded: bool,
}

fn covariates(n: usize) -> Vec<Vec<f64>> {
    let spec = FourierSpec::new(WEEKLY_PERIOD_REAL, FOURIER_PAIRS).expect("valid weekly spec");
    fourier_terms::<f64>(&spec, 1, n)
}

/// Left-pads with the first value so at least `min_len` points exist.
fn padded(z: &[f64], min_len: usize) -> (Vec<f64>, usize) {
    let pad = min_len.saturating_sub(z.len());
    let mut out = vec![z[0]; pad];
    out.extend_from_slice(z);
    (out, pad)
}

fn input_rows(z: &[f64], start: usize, len: usize, pad: usize, cov: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
    (start..start + len)
        .map(|p| {
            let mut row = vec![z[p]];
            if let Some(cov) = cov {
                // Padding positions reuse the first real position's covariates.
                row.extend_from_slice(&cov[p.saturating_sub(pad)]);
            }
            row
        })
        .collect()
}

/// Stride-1 windows over preprocessed series.
pub fn make_windows(series: &[Vec<f64>], config: &RnnConfig) -> Vec<WindowedInstance> {
    let (i_w, o_w) = (config.input_window, config.output_window);
    let mut out = Vec::new();
    for (s, z) in series.iter().enumerate() {
        if z.is_empty() {
            continue;
        }
        let (zp, pad) = padded(z, i_w + o_w);
        let cov = (config.seasonality_mode == SeasonalityMode::FourierCovariates).then(|| covariates(z.len()));
        for start in 0..=zp.len() - i_w - o_w {
            out.push(WindowedInstance {
                series: s,
                input: input_rows(&zp, start, i_w, pad, cov.as_deref()),
                target: zp[start + i_w..start + i_w + o_w].to_vec(),
                padded: pad > 0,
            });
        }
    }
    out
}

/// The final window of each series, used to forecast beyond its end.
fn forecast_inputs(series: &[Vec<f64>], config: &RnnConfig) -> Vec<Vec<Vec<f64>>> {
    let i_w = config.input_window;
    series
        .iter()
        .map(|z| {
            let (zp, pad) = padded(z, i_w);
            let cov = (config.seasonality_mode == SeasonalityMode::FourierCovariates).then(|| covariates(z.len()));
            input_rows(&zp, zp.len() - i_w, i_w, pad, cov.as_deref())
        })
        .collect()
}

/// Mean squared error over the batch plus the L2 penalty, and its gradient.
pub fn batch_loss(stack: &LstmStack, batch: &[&WindowedInstance], l2: f64, grad: Option<&mut [f64]>) -> f64 {
    let h = stack.output as f64;
    let scale = 1.0 / (batch.len() as f64 * h);
    let mut mse = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    for w in batch {
        let trace = stack.forward_trace(&w.input);
        let resid: Vec<f64> = trace.output.iter().zip(&w.target).map(|(p, t)| p - t).collect();
        mse += resid.iter().map(|r| r * r).sum::<f64>() * scale;
        if let Some(g) = grad.as_deref_mut() {
            let dy: Vec<f64> = resid.iter().map(|r| 2.0 * r * scale).collect();
            stack.backward(&trace, &dy, g);
        }
    }
    let penalty: f64 = stack.params.iter().map(|p| p * p).sum();
    if let Some(g) = grad {
        for (gk, pk) in g.iter_mut().zip(&stack.params) {
            *gk += 2.0 * l2 * pk;
        }
    }
    mse + l2 * penalty
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRnn {
    pub config: RnnConfig,
    pub stack: LstmStack,
    /// Loss over all training windows before and after training.
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

fn full_loss(stack: &LstmStack, windows: &[WindowedInstance], l2: f64) -> f64 {
    let refs: Vec<&WindowedInstance> = windows.iter().collect();
    batch_loss(stack, &refs, l2, None)
}

/// Trains on already preprocessed series.
pub fn lstm_train_preprocessed(series: &[Vec<f64>], config: &RnnConfig, seed: u64) -> Result<TrainedRnn> {
    config.validate()?;
    let windows = make_windows(series, config);
    if windows.is_empty() {
        return Err(Error::InvalidInput("no training windows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stack = LstmStack::random(
        config.input_dim(),
        config.cell_dimension,
        config.num_hidden_layers,
        config.output_window,
        config.init_stddev,
        &mut rng,
    );
    let mut opt: Box<dyn Optimizer> = match config.optimizer {
        OptimizerKind::Cocob => Box::new(Cocob::new(&stack.params, COCOB_ALPHA)),
        OptimizerKind::Adam => Box::new(Adam::new(stack.params.len(), ADAM_LEARNING_RATE)),
    };
    let noise = Normal::new(0.0, config.noise_stddev).map_err(|e| Error::config("noise_stddev", e.to_string()))?;
    let mut grad = vec![0.0; stack.params.len()];
    let initial_loss = full_loss(&stack, &windows, config.l2_weight);
    let mut epoch_losses = Vec::with_capacity(config.max_epochs);
    for epoch in 0..config.max_epochs {
        let mut total = 0.0;
        for b in 0..config.epoch_size {
            let batch: Vec<WindowedInstance> = (0..config.mini_batch_size)
                .map(|_| {
                    let mut w = windows[rng.random_range(0..windows.len())].clone();
                    for row in &mut w.input {
                        row[0] += noise.sample(&mut rng);
                    }
                    w
                })
                .collect();
            let refs: Vec<&WindowedInstance> = batch.iter().collect();
            let loss = batch_loss(&stack, &refs, config.l2_weight, Some(&mut grad));
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite RNN loss at epoch {epoch}, batch {b} (loss {loss})"
                )));
            }
            opt.step(&mut stack.params, &grad);
            total += loss;
        }
        epoch_losses.push(total / config.epoch_size as f64);
    }
    let final_loss = full_loss(&stack, &windows, config.l2_weight);
    Ok(TrainedRnn {
        config: *config,
        stack,
        initial_loss,
        final_loss,
        epoch_losses,
    })
}

/// Output of [`rnn_fit_forecast`]: per-series forecasts, with `None` marking
/// series the network could not model (non-positive mean).
pub struct RnnForecasts {
    pub model: TrainedRnn,
    pub forecasts: Vec<Option<Vec<f64>>>,
}

fn preprocess_all(series: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Option<f64>>) {
    let mut z = Vec::with_capacity(series.len());
    let mut means = Vec::with_capacity(series.len());
    for s in series {
        match rnn_preprocess(s) {
            Ok((v, m)) => {
                z.push(v);
                means.push(Some(m));
            }
            Err(_) => {
                z.push(Vec::new());
                means.push(None);
            }
        }
    }
    (z, means)
}

pub fn lstm_train(series: &[Vec<f64>], config: &RnnConfig, seed: u64) -> Result<TrainedRnn> {
    let (z, _) = preprocess_all(series);
    lstm_train_preprocessed(&z, config, seed)
}

/// Direct multi-step forecasts from the final window of each series.
pub fn rnn_forecast(model: &TrainedRnn, series: &[Vec<f64>]) -> Vec<Option<Vec<f64>>> {
    let (z, means) = preprocess_all(series);
    let nonempty: Vec<Vec<f64>> = z.iter().map(|v| if v.is_empty() { vec![0.0] } else { v.clone() }).collect();
    let inputs = forecast_inputs(&nonempty, &model.config);
    inputs
        .iter()
        .zip(&means)
        .map(|(inp, m)| m.map(|mean| rnn_postprocess(&model.stack.forward(inp), mean)))
        .collect()
}

/// Trains on `series` and forecasts `config.output_window` steps past each.
pub fn rnn_fit_forecast(series: &[Vec<f64>], config: &RnnConfig, seed: u64) -> Result<RnnForecasts> {
    let model = lstm_train(series, config, seed)?;
    let forecasts = rnn_forecast(&model, series);
    Ok(RnnForecasts { model, forecasts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub config: RnnConfig,
    /// Every sampled configuration with its mean validation sMAPE.
    pub trials: Vec<(RnnConfig, f64)>,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Draws one configuration from the search space.
pub fn sample_config<R: Rng>(rng: &mut R, base: &RnnConfig) -> RnnConfig {
    RnnConfig {
        cell_dimension: rng.random_range(16..=64),
        mini_batch_size: rng.random_range(8..=64),
        max_epochs: rng.random_range(5..=30),
        epoch_size: rng.random_range(2..=10),
        num_hidden_layers: rng.random_range(1..=2),
        l2_weight: log_uniform(rng, 1e-5, 1e-2),
        init_stddev: log_uniform(rng, 1e-4, 0.5),
        noise_stddev: log_uniform(rng, 1e-4, 0.1),
        ..*base
    }
}

/// Seeded random search scored on the last `base.output_window` points of
/// every series.
pub fn rnn_tune(series: &[Vec<f64>], base: &RnnConfig, budget: usize, seed: u64, variant: SmapeVariant) -> Result<TuneResult> {
    if budget == 0 {
        return Err(Error::config("rnn_budget", "must be at least 1"));
    }
    let h = base.output_window;
    let (train, valid): (Vec<Vec<f64>>, Vec<Vec<f64>>) = series
        .iter()
        .map(|s| {
            let cut = s.len().saturating_sub(h).max(1);
            (s[..cut].to_vec(), s[cut..].to_vec())
        })
        .unzip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(budget);
    for trial in 0..budget {
        let cfg = sample_config(&mut rng, base);
        let fit = rnn_fit_forecast(&train, &cfg, seed.wrapping_add(1 + trial as u64));
        let score = match fit {
            Ok(f) => {
                let mut total = 0.0;
                let mut count = 0usize;
                for (fc, y) in f.forecasts.iter().zip(&valid) {
                    if let (Some(fc), false) = (fc, y.is_empty()) {
                        if let Ok(v) = smape(&fc[..y.len()], y, variant) {
                            total += v;
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    total / count as f64
                } else {
                    f64::INFINITY
                }
            }
            Err(e) => {
                log::warn!("RNN trial {trial} failed: {e}");
                f64::INFINITY
            }
        };
        log::debug!("RNN trial {trial}: validation sMAPE {score}");
        trials.push((cfg, score));
    }
    let best = trials
        .iter()
        .enumerate()
        .fold(0, |b, (i, t)| if t.1 < trials[b].1 { i } else { b });
    Ok(TuneResult {
        config: trials[best].0,
        trials,
    })
}

pub fn save_checkpoint(model: &TrainedRnn, path: &Path) -> Result<()> {
    let text = serde_json::to_string(model).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedRnn> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("bad checkpoint {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(h: usize, mode: SeasonalityMode) -> RnnConfig {
        RnnConfig {
            cell_dimension: 6,
            mini_batch_size: 8,
            max_epochs: 10,
            epoch_size: 4,
            ..RnnConfig::for_horizon(h, mode)
        }
    }

    #[test]
    fn preprocess_examples() {
        let (z, m) = rnn_preprocess(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert_eq!(z, vec![0.5f64.ln(), 0.0, 1.5f64.ln()]);
        assert_eq!(rnn_preprocess(&[4.0; 5]).unwrap().0, vec![0.0; 5]);
        assert!(rnn_preprocess(&[0.0, 0.0]).is_err());
        let y = [3.0, 9.5, 0.25];
        let (z, m) = rnn_preprocess(&y).unwrap();
        for (a, b) in rnn_postprocess(&z, m).iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn window_counts() {
        let mut cfg = tiny(8, SeasonalityMode::SeasonalLagWindow);
        assert_eq!(cfg.input_window, 53);
        assert_eq!(make_windows(&[vec![0.0; 105]], &cfg).len(), 45);
        assert_eq!(make_windows(&[vec![0.0; 61]], &cfg).len(), 1);
        let short = make_windows(&[vec![0.3; 20]], &cfg);
        assert_eq!(short.len(), 1);
        assert!(short[0].padded);
        cfg.seasonality_mode = SeasonalityMode::FourierCovariates;
        cfg.input_window = default_input_window(8, cfg.seasonality_mode);
        assert_eq!(cfg.input_window, 10);
        let w = make_windows(&[vec![0.0; 30]], &cfg);
        assert_eq!(w[0].input[0].len(), 11);
    }

    #[test]
    fn covariates_align_across_series() {
        let cfg = tiny(4, SeasonalityMode::FourierCovariates);
        let w = make_windows(&[vec![0.1; 20], vec![0.9; 20]], &cfg);
        let a = w.iter().find(|x| x.series == 0).unwrap();
        let b = w.iter().find(|x| x.series == 1).unwrap();
        for (ra, rb) in a.input.iter().zip(&b.input) {
            assert_eq!(ra[1..], rb[1..]);
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let series: Vec<Vec<f64>> = (0..6)
            .map(|s| (0..40).map(|t| 10.0 + s as f64 + 3.0 * ((t as f64) / 4.0).sin()).collect())
            .collect();
        let cfg = tiny(4, SeasonalityMode::FourierCovariates);
        let a = lstm_train(&series, &cfg, 3).unwrap();
        let b = lstm_train(&series, &cfg, 3).unwrap();
        assert_eq!(a.stack.params, b.stack.params);
        assert!(a.final_loss <= a.initial_loss);
        assert_eq!(a.epoch_losses.len(), cfg.max_epochs);
    }

    #[test]
    fn constant_series_forecast() {
        let series = vec![vec![50.0; 40]; 4];
        let cfg = tiny(4, SeasonalityMode::FourierCovariates);
        let out = rnn_fit_forecast(&series, &cfg, 1).unwrap();
        for f in out.forecasts.iter().flatten() {
            assert_eq!(f.len(), 4);
            assert!(f.iter().all(|v| (v - 50.0).abs() <= 5.0), "{f:?}");
        }
    }

    #[test]
    fn zero_series_left_out() {
        let series = vec![vec![5.0; 30], vec![0.0; 30]];
        let out = rnn_fit_forecast(&series, &tiny(3, SeasonalityMode::FourierCovariates), 1).unwrap();
        assert!(out.forecasts[0].is_some());
        assert!(out.forecasts[1].is_none());
    }

    #[test]
    fn tuning_budget_one_and_argmin() {
        let series: Vec<Vec<f64>> = (0..3).map(|s| (0..30).map(|t| 5.0 + ((t + s) % 4) as f64).collect()).collect();
        let mut base = tiny(3, SeasonalityMode::FourierCovariates);
        base.max_epochs = 1;
        let one = rnn_tune(&series, &base, 1, 5, SmapeVariant::Standard).unwrap();
        assert_eq!(one.trials.len(), 1);
        assert_eq!(one.config, one.trials[0].0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(one.config, sample_config(&mut rng, &base));
    }

    #[test]
    fn checkpoint_round_trip() {
        let series = vec![vec![5.0, 6.0, 7.0, 6.0, 5.0, 6.0, 7.0, 6.0, 5.0, 6.0]; 2];
        let model = lstm_train(&series, &tiny(2, SeasonalityMode::FourierCovariates), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rnn.json");
        save_checkpoint(&model, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), model);
    }
}
