//! Feature-based meta-learner: boosted trees map series features to one
//! score per base model, and the softmax of the scores weights the forecasts.

use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::gbt::{Tree, TreeParams};
use super::ForecastMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FformaParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub reg_lambda: f64,
}

impl Default for FformaParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            reg_lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FformaModel {
    pub params: FformaParams,
    pub n_models: usize,
    /// `trees[round][model]`, leaf values already scaled by the step size.
    pub trees: Vec<Vec<Tree>>,
    /// Mean expected loss (relative to the mean training loss) before
    /// training and after each accepted round.
    pub objective_trace: Vec<f64>,
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

fn objective(scores: &[Vec<f64>], losses: &[Vec<f64>]) -> f64 {
    scores
        .iter()
        .zip(losses)
        .map(|(s, l)| softmax(s).iter().zip(l).map(|(p, v)| p * v).sum::<f64>())
        .sum::<f64>()
        / scores.len() as f64
}

/// `losses[series][model]` are validation errors of each base model.
pub fn fforma_train(features: &[FeatureVector], losses: &[Vec<f64>], params: FformaParams) -> Result<FformaModel> {
    let n = features.len();
    let m = losses.first().map_or(0, Vec::len);
    if n == 0 || losses.len() != n || m < 2 || losses.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput(
            "meta-learner needs one feature row and one loss row per series".into(),
        ));
    }
    if losses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite validation loss".into()));
    }
    let scale = losses.iter().flatten().map(|v| v.abs()).sum::<f64>() / (n * m) as f64;
    let losses: Vec<Vec<f64>> = if scale > 0.0 {
        losses.iter().map(|r| r.iter().map(|v| v / scale).collect()).collect()
    } else {
        losses.to_vec()
    };
    let x: Vec<Vec<f64>> = features.iter().map(|f| f.values.to_vec()).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        reg_lambda: params.reg_lambda,
        ..TreeParams::default()
    };

    let mut scores = vec![vec![0.0; m]; n];
    let mut trace = vec![objective(&scores, &losses)];
    let mut trees = Vec::with_capacity(params.rounds);
    for round in 0..params.rounds {
        let mut grad = vec![vec![0.0; n]; m];
        let mut hess = vec![vec![0.0; n]; m];
        for i in 0..n {
            let p = softmax(&scores[i]);
            let l = &losses[i];
            let lbar: f64 = p.iter().zip(l).map(|(a, b)| a * b).sum();
            let range = l.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - l.iter().copied().fold(f64::INFINITY, f64::min);
            for k in 0..m {
                grad[k][i] = p[k] * (l[k] - lbar);
                // Upper bound on |p(l - lbar)(1 - 2p)|, so Newton steps stay conservative.
                hess[k][i] = (p[k] * range).max(1e-12);
            }
        }
        let base: Vec<Tree> = (0..m)
            .map(|k| Tree::fit(&x, &grad[k], &hess[k], tree_params))
            .collect();
        let current = *trace.last().expect("trace seeded");
        let mut step = params.learning_rate;
        let mut accepted = None;
        for _ in 0..12 {
            let candidate: Vec<Vec<f64>> = scores
                .iter()
                .zip(&x)
                .map(|(s, xi)| s.iter().zip(&base).map(|(v, t)| v + step * t.predict(xi)).collect())
                .collect();
            let obj = objective(&candidate, &losses);
            if obj <= current {
                accepted = Some((candidate, obj));
                break;
            }
            step /= 2.0;
        }
        let Some((candidate, obj)) = accepted else {
            log::debug!("meta-learner stopped after {round} rounds: no descent step");
            break;
        };
        scores = candidate;
        trace.push(obj);
        trees.push(
            base.into_iter()
                .map(|mut t| {
                    t.scale(step);
                    t
                })
                .collect(),
        );
    }
    Ok(FformaModel {
        params,
        n_models: m,
        trees,
        objective_trace: trace,
    })
}

impl FformaModel {
    pub fn weights(&self, features: &FeatureVector) -> Vec<f64> {
        let mut s = vec![0.0; self.n_models];
        for round in &self.trees {
            for (v, t) in s.iter_mut().zip(round) {
                *v += t.predict(&features.values);
            }
        }
        softmax(&s)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "variant=FFORMA\nrounds={}\nmax_depth={}\nlearning_rate={}\nmodels={}\n",
            self.params.rounds, self.params.max_depth, self.params.learning_rate, self.n_models
        );
        for (r, round) in self.trees.iter().enumerate() {
            for (k, t) in round.iter().enumerate() {
                out.push_str(&format!("tree {r} {k} {}\n", t.dump()));
            }
        }
        out
    }
}

/// Combines test forecasts with per-series softmax weights; `features` are in
/// the matrix's series order.
pub fn fforma_predict(model: &FformaModel, features: &[FeatureVector], fm: &ForecastMatrix<f64>) -> Result<Vec<f64>> {
    if features.len() != fm.n_series() {
        return Err(Error::InvalidInput("one feature row per series required".into()));
    }
    if fm.models.len() != model.n_models {
        return Err(Error::ColumnMismatch {
            expected: model.n_models,
            got: fm.models.len(),
        });
    }
    let mut out = Vec::with_capacity(fm.n_rows());
    for (s, f) in features.iter().enumerate() {
        let w = model.weights(f);
        for row in &fm.values[s * fm.horizon..(s + 1) * fm.horizon] {
            out.push(row.iter().zip(&w).map(|(a, b)| a * b).sum());
        }
    }
    Ok(out)
}
