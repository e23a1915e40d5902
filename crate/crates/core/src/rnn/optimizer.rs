//! Per-parameter optimisers: COCOB-Backprop and Adam.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Cocob,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cocob" => Ok(OptimizerKind::Cocob),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(crate::Error::InvalidInput(format!("unknown optimizer `{other}`"))),
        }
    }
}

pub trait Optimizer {
    fn step(&mut self, params: &mut [f64], grad: &[f64]);
}

pub const COCOB_ALPHA: f64 = 100.0;

/// Coin-betting optimiser: each parameter bets a fraction of its accumulated
/// reward, so no learning rate is needed.
pub struct Cocob {
    alpha: f64,
    initial: Vec<f64>,
    max_grad: Vec<f64>,
    abs_sum: Vec<f64>,
    reward: Vec<f64>,
    neg_sum: Vec<f64>,
}

impl Cocob {
    pub fn new(params: &[f64], alpha: f64) -> Self {
        let n = params.len();
        Self {
            alpha,
            initial: params.to_vec(),
            max_grad: vec![1e-8; n],
            abs_sum: vec![0.0; n],
            reward: vec![0.0; n],
            neg_sum: vec![0.0; n],
        }
    }
}

impl Optimizer for Cocob {
    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for k in 0..params.len() {
            let g = grad[k];
            let l = self.max_grad[k].max(g.abs());
            self.max_grad[k] = l;
            self.abs_sum[k] += g.abs();
            self.reward[k] = (self.reward[k] - g * (params[k] - self.initial[k])).max(0.0);
            self.neg_sum[k] -= g;
            let denom = l * (self.abs_sum[k] + l).max(self.alpha * l);
            params[k] = self.initial[k] + self.neg_sum[k] / denom * (l + self.reward[k]);
        }
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            params[k] -= self.lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + self.eps);
        }
    }
}
