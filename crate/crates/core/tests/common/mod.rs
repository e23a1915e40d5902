#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Daily series shaped like ATM withdrawals: a day-of-week profile, yearly
/// seasonality, a slow drift, multiplicative noise and a few missing days.
pub fn synthetic_daily(n_series: usize, days: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("nn5,daily,1996-03-18\n");
    for s in 0..n_series {
        let level: f64 = rng.random_range(10.0..40.0);
        let amp: f64 = rng.random_range(0.05..0.3);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let drift: f64 = rng.random_range(-0.2..0.2);
        let noise: f64 = rng.random_range(0.05..0.25);
        let week: Vec<f64> = (0..7).map(|_| rng.random_range(0.6..1.4)).collect();
        let _ = write!(out, "S{:03}:", s + 1);
        for d in 0..days {
            if d > 0 {
                out.push(',');
            }
            if rng.random::<f64>() < 0.005 {
                out.push_str("NA");
                continue;
            }
            let t = d as f64;
            let yearly = 1.0 + amp * (std::f64::consts::TAU * t / 365.25 + phase).sin();
            let trend = 1.0 + drift * t / days as f64;
            let e: f64 = rng.sample(StandardNormal);
            let v = (level * week[d % 7] * yearly * trend * (noise * e).exp()).max(0.0);
            let _ = write!(out, "{:.3}", v);
        }
        out.push('\n');
    }
    out
}

pub const ALL_METHODS: [&str; 13] = [
    "Theta",
    "TBATS",
    "DHR-ARIMA",
    "RNN",
    "Average",
    "FFORMA_Original",
    "FFORMA_Modified",
    "LR_PH_Forecasts_Features",
    "LR_PH_Log_Forecasts_Features",
    "LR_PH_Log_Forecasts",
    "LR_S_Forecasts_Features",
    "LR_S_Log_Forecasts_Features",
    "LR_S_Log_Forecasts",
];

/// Writes a dataset and a config next to each other; returns the config path.
pub fn write_experiment(dir: &Path, data: &str, name: &str, horizon: usize, budget: usize, methods: &[&str]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("data.txt"), data).unwrap();
    let list = methods.iter().map(|m| format!("\"{m}\"")).collect::<Vec<_>>().join(", ");
    let cfg = format!(
        "methods = [{list}]\nseed = 7\noutput_dir = \"out\"\ncache_dir = \"cache\"\n\n\
         [dataset]\npath = \"data.txt\"\nname = \"{name}\"\nhorizon = {horizon}\n\n\
         [rnn]\nbudget = {budget}\n"
    );
    let path = dir.join("experiment.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

/// Relative path -> bytes for every file under `root`, sorted.
pub fn snapshot(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
