use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weekcast::rnn::optimizer::OptimizerKind;
use weekcast::rnn::{lstm_train_preprocessed, LstmStack, RnnConfig, SeasonalityMode};

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Straight-line evaluation of a single-layer peephole LSTM read off the
/// flat parameter layout.
fn reference_forward(net: &LstmStack, inputs: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(net.layers, 1);
    let (d, n, out) = (net.input_dim, net.cell, net.output);
    let p = &net.params;
    let w = |r: usize, c: usize| p[r * d + c];
    let u = |r: usize, c: usize| p[4 * n * d + r * n + c];
    let peep = 4 * n * d + 4 * n * n;
    let bias = peep + 3 * n;
    let v0 = bias + 4 * n;
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    for x in inputs {
        let mut pre = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (gate, slot) in pre.iter_mut().enumerate() {
            for j in 0..n {
                let r = gate * n + j;
                let mut a = p[bias + r];
                for k in 0..d {
                    a += w(r, k) * x[k];
                }
                for k in 0..n {
                    a += u(r, k) * h[k];
                }
                slot[j] = a;
            }
        }
        let mut h_new = vec![0.0; n];
        let mut c_new = vec![0.0; n];
        for j in 0..n {
            let i = sig(pre[0][j] + p[peep + j] * c[j]);
            let f = sig(pre[1][j] + p[peep + n + j] * c[j]);
            let g = pre[2][j].tanh();
            c_new[j] = f * c[j] + i * g;
            let o = sig(pre[3][j] + p[peep + 2 * n + j] * c_new[j]);
            h_new[j] = o * c_new[j].tanh();
        }
        h = h_new;
        c = c_new;
    }
    (0..out)
        .map(|r| p[v0 + out * n + r] + (0..n).map(|k| p[v0 + r * n + k] * h[k]).sum::<f64>())
        .collect()
}

#[test]
fn forward_matches_reference_two_cells_three_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = LstmStack::random(2, 2, 1, 2, 0.7, &mut rng);
    // Non-zero biases so every parameter block is exercised.
    let len = net.params.len();
    for (k, v) in net.params.iter_mut().enumerate().skip(len - 10) {
        *v += 0.1 * k as f64 / len as f64;
    }
    let inputs = vec![vec![0.3, -1.2], vec![1.5, 0.4], vec![-0.7, 0.9]];
    let got = net.forward(&inputs);
    let want = reference_forward(&net, &inputs);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn memorises_a_single_window() {
    let mut cfg = RnnConfig::for_horizon(4, SeasonalityMode::SeasonalLagWindow);
    cfg.input_window = 6;
    cfg.output_window = 4;
    cfg.cell_dimension = 32;
    cfg.mini_batch_size = 1;
    cfg.epoch_size = 10;
    cfg.max_epochs = 200;
    cfg.l2_weight = 0.0;
    cfg.noise_stddev = 1e-12;
    cfg.optimizer = OptimizerKind::Adam;
    let series = vec![vec![0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.4, -0.3, 0.15, 0.0]];
    let model = lstm_train_preprocessed(&series, &cfg, 1).unwrap();
    assert!(model.final_loss < 1e-4, "final MSE {}", model.final_loss);
}
