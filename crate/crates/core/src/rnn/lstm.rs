//! Stacked peephole LSTM with a dense projection of the last hidden state.
//!
//! All parameters live in one flat vector so optimisers and gradient checks
//! can treat them uniformly. Per layer, in order: input weights `W`
//! (`4n x d`), recurrent weights `U` (`4n x n`), peepholes `p_i, p_f, p_o`
//! (`n` each) and biases (`4n`). Gate rows are ordered input, forget,
//! candidate, output. The projection `V` (`H x n`) and its bias follow the
//! last layer.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmStack {
    pub input_dim: usize,
    pub cell: usize,
    pub layers: usize,
    pub output: usize,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct LayerOffsets {
    d: usize,
    w: usize,
    u: usize,
    p: usize,
    b: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Values kept from the forward pass of one layer at one step.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
}

pub struct ForwardTrace {
    layers: Vec<Vec<StepCache>>,
    pub output: Vec<f64>,
}

impl LstmStack {
    pub fn n_params(input_dim: usize, cell: usize, layers: usize, output: usize) -> usize {
        let mut total = 0;
        for l in 0..layers {
            let d = if l == 0 { input_dim } else { cell };
            total += 4 * cell * d + 4 * cell * cell + 3 * cell + 4 * cell;
        }
        total + output * cell + output
    }

    pub fn zeros(input_dim: usize, cell: usize, layers: usize, output: usize) -> Self {
        Self {
            input_dim,
            cell,
            layers,
            output,
            params: vec![0.0; Self::n_params(input_dim, cell, layers, output)],
        }
    }

    /// Weights drawn from `N(0, stddev^2)`, biases zero.
    pub fn random<R: Rng>(input_dim: usize, cell: usize, layers: usize, output: usize, stddev: f64, rng: &mut R) -> Self {
        let mut s = Self::zeros(input_dim, cell, layers, output);
        let normal = Normal::new(0.0, stddev).expect("positive stddev");
        let n = cell;
        for l in 0..layers {
            let o = s.offsets(l);
            for v in &mut s.params[o.w..o.b] {
                *v = normal.sample(rng);
            }
        }
        let (v, _) = s.projection_offsets();
        for p in &mut s.params[v..v + output * n] {
            *p = normal.sample(rng);
        }
        s
    }

    fn offsets(&self, layer: usize) -> LayerOffsets {
        let n = self.cell;
        let mut start = 0;
        for l in 0..layer {
            let d = if l == 0 { self.input_dim } else { n };
            start += 4 * n * d + 4 * n * n + 7 * n;
        }
        let d = if layer == 0 { self.input_dim } else { n };
        let w = start;
        let u = w + 4 * n * d;
        let p = u + 4 * n * n;
        let b = p + 3 * n;
        LayerOffsets { d, w, u, p, b }
    }

    fn projection_offsets(&self) -> (usize, usize) {
        let v = self.params.len() - self.output * self.cell - self.output;
        (v, v + self.output * self.cell)
    }

    /// Runs the network over `inputs` (steps x input_dim).
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        self.forward_trace(inputs).output
    }

    pub fn forward_trace(&self, inputs: &[Vec<f64>]) -> ForwardTrace {
        let n = self.cell;
        let pr = &self.params;
        let mut seq: Vec<Vec<f64>> = inputs.to_vec();
        let mut caches = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let o = self.offsets(l);
            let mut h = vec![0.0; n];
            let mut c = vec![0.0; n];
            let mut layer_cache = Vec::with_capacity(seq.len());
            let mut out = Vec::with_capacity(seq.len());
            for x in &seq {
                let mut a = pr[o.b..o.b + 4 * n].to_vec();
                for (r, ar) in a.iter_mut().enumerate() {
                    let wr = &pr[o.w + r * o.d..o.w + (r + 1) * o.d];
                    let ur = &pr[o.u + r * n..o.u + (r + 1) * n];
                    *ar += wr.iter().zip(x).map(|(p, v)| p * v).sum::<f64>()
                        + ur.iter().zip(&h).map(|(p, v)| p * v).sum::<f64>();
                }
                let (pi, pf, po) = (&pr[o.p..o.p + n], &pr[o.p + n..o.p + 2 * n], &pr[o.p + 2 * n..o.p + 3 * n]);
                let mut ig = vec![0.0; n];
                let mut fg = vec![0.0; n];
                let mut gg = vec![0.0; n];
                let mut og = vec![0.0; n];
                let mut cn = vec![0.0; n];
                let mut tc = vec![0.0; n];
                let mut hn = vec![0.0; n];
                for k in 0..n {
                    ig[k] = sigmoid(a[k] + pi[k] * c[k]);
                    fg[k] = sigmoid(a[n + k] + pf[k] * c[k]);
                    gg[k] = a[2 * n + k].tanh();
                    cn[k] = fg[k] * c[k] + ig[k] * gg[k];
                    og[k] = sigmoid(a[3 * n + k] + po[k] * cn[k]);
                    tc[k] = cn[k].tanh();
                    hn[k] = og[k] * tc[k];
                }
                layer_cache.push(StepCache {
                    x: x.clone(),
                    h_prev: std::mem::replace(&mut h, hn.clone()),
                    c_prev: std::mem::replace(&mut c, cn.clone()),
                    i: ig,
                    f: fg,
                    g: gg,
                    o: og,
                    c: cn,
                    tc,
                });
                out.push(hn);
            }
            caches.push(layer_cache);
            seq = out;
        }
        let last = seq.last().cloned().unwrap_or_else(|| vec![0.0; n]);
        let (v, bias) = self.projection_offsets();
        let output = (0..self.output)
            .map(|j| {
                pr[bias + j]
                    + pr[v + j * n..v + (j + 1) * n]
                        .iter()
                        .zip(&last)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        ForwardTrace {
            layers: caches,
            output,
        }
    }

    /// Accumulates into `grad` the gradient of `sum_j dy[j] * output[j]`.
    pub fn backward(&self, trace: &ForwardTrace, dy: &[f64], grad: &mut [f64]) {
        let n = self.cell;
        let pr = &self.params;
        let (v, bias) = self.projection_offsets();
        let steps = trace.layers.first().map_or(0, Vec::len);
        if steps == 0 {
            for (j, &d) in dy.iter().enumerate() {
                grad[bias + j] += d;
            }
            return;
        }
        let top = trace.layers.last().expect("at least one layer");
        let h_last: Vec<f64> = {
            let s = &top[steps - 1];
            s.o.iter().zip(&s.tc).map(|(a, b)| a * b).collect()
        };
        let mut dh_out = vec![vec![0.0; n]; steps];
        for (j, &d) in dy.iter().enumerate() {
            grad[bias + j] += d;
            for k in 0..n {
                grad[v + j * n + k] += d * h_last[k];
                dh_out[steps - 1][k] += d * pr[v + j * n + k];
            }
        }
        for l in (0..self.layers).rev() {
            let o = self.offsets(l);
            let cache = &trace.layers[l];
            let (pi, pf, po) = (&pr[o.p..o.p + n], &pr[o.p + n..o.p + 2 * n], &pr[o.p + 2 * n..o.p + 3 * n]);
            let mut dx_all = vec![vec![0.0; o.d]; steps];
            let mut dh_next = vec![0.0; n];
            let mut dc_next = vec![0.0; n];
            let mut da = vec![0.0; 4 * n];
            for t in (0..steps).rev() {
                let s = &cache[t];
                let mut dc_prev = vec![0.0; n];
                for k in 0..n {
                    let dh = dh_out[t][k] + dh_next[k];
                    let da_o = dh * s.tc[k] * s.o[k] * (1.0 - s.o[k]);
                    let dc = dh * s.o[k] * (1.0 - s.tc[k] * s.tc[k]) + dc_next[k] + da_o * po[k];
                    let da_i = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
                    let da_g = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
                    let da_f = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
                    dc_prev[k] = dc * s.f[k] + da_i * pi[k] + da_f * pf[k];
                    da[k] = da_i;
                    da[n + k] = da_f;
                    da[2 * n + k] = da_g;
                    da[3 * n + k] = da_o;
                    grad[o.p + k] += da_i * s.c_prev[k];
                    grad[o.p + n + k] += da_f * s.c_prev[k];
                    grad[o.p + 2 * n + k] += da_o * s.c[k];
                }
                let mut dh_prev = vec![0.0; n];
                let dx = &mut dx_all[t];
                for (r, &dar) in da.iter().enumerate() {
                    if dar == 0.0 {
                        continue;
                    }
                    grad[o.b + r] += dar;
                    let wrow = o.w + r * o.d;
                    for (q, &xq) in s.x.iter().enumerate() {
                        grad[wrow + q] += dar * xq;
                        dx[q] += dar * pr[wrow + q];
                    }
                    let urow = o.u + r * n;
                    for q in 0..n {
                        grad[urow + q] += dar * s.h_prev[q];
                        dh_prev[q] += dar * pr[urow + q];
                    }
                }
                dh_next = dh_prev;
                dc_next = dc_prev;
            }
            dh_out = dx_all;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_projection_bias() {
        let mut s = LstmStack::zeros(3, 4, 2, 5);
        let (_, b) = s.projection_offsets();
        for j in 0..5 {
            s.params[b + j] = j as f64 * 0.5;
        }
        let out = s.forward(&vec![vec![1.0, -2.0, 0.3]; 6]);
        assert_eq!(out, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn hidden_states_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = LstmStack::random(1, 8, 2, 3, 2.0, &mut rng);
        let tr = s.forward_trace(&vec![vec![50.0]; 20]);
        for layer in &tr.layers {
            for st in layer {
                assert!(st.c.iter().all(|v| v.is_finite()));
                assert!(st.o.iter().zip(&st.tc).all(|(a, b)| (a * b).abs() <= 1.0));
            }
        }
    }

    #[test]
    fn parameter_count() {
        let s = LstmStack::zeros(11, 4, 2, 8);
        let o1 = s.offsets(1);
        assert_eq!(o1.w, 4 * 4 * 11 + 4 * 4 * 4 + 7 * 4);
        assert_eq!(s.params.len(), LstmStack::n_params(11, 4, 2, 8));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = LstmStack::random(2, 3, 2, 2, 0.5, &mut rng);
        let inputs: Vec<Vec<f64>> = (0..4).map(|t| vec![t as f64 * 0.3, 1.0 - t as f64 * 0.2]).collect();
        let dy = [0.7, -1.3];
        let mut grad = vec![0.0; s.params.len()];
        s.backward(&s.forward_trace(&inputs), &dy, &mut grad);
        let f = |p: &[f64]| {
            let t = LstmStack { params: p.to_vec(), ..s.clone() };
            t.forward(&inputs).iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>()
        };
        for k in 0..s.params.len() {
            let mut plus = s.params.clone();
            let mut minus = s.params.clone();
            plus[k] += 1e-6;
            minus[k] -= 1e-6;
            let fd = (f(&plus) - f(&minus)) / 2e-6;
            assert!((fd - grad[k]).abs() < 1e-7 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grad[k]);
        }
    }
}
