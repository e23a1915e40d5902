//! TOML experiment configuration and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::method::Method;
use crate::combine::FformaParams;
use crate::error::{Error, Result};
use crate::eval::SmapeVariant;
use crate::models::dhr::MAX_FOURIER_ORDER;
use crate::rnn::{OptimizerKind, SeasonalityMode};
use crate::series::{canonical_dataset_name, table_horizon, ImputePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub methods: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub rnn: RnnSection,
    #[serde(default)]
    pub dhr: DhrSection,
    #[serde(default)]
    pub lasso: LassoSection,
    #[serde(default)]
    pub fforma: FformaSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    pub name: String,
    pub horizon: usize,
    /// Raw observations per week; defaults to the file's granularity.
    #[serde(default)]
    pub block: Option<usize>,
    #[serde(default = "default_impute")]
    pub impute: String,
    #[serde(default = "default_true")]
    pub seasonal: bool,
    /// Defaults to the Suilin variant for Kaggle and Traffic.
    #[serde(default)]
    pub smape_variant: Option<SmapeVariant>,
}

fn default_impute() -> String {
    "median".into()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnSection {
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub mode: SeasonalityMode,
    #[serde(default)]
    pub optimizer: OptimizerKind,
}

fn default_budget() -> usize {
    20
}

impl Default for RnnSection {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            mode: SeasonalityMode::default(),
            optimizer: OptimizerKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhrSection {
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_min() -> usize {
    1
}

fn default_k_max() -> usize {
    MAX_FOURIER_ORDER
}

impl Default for DhrSection {
    fn default() -> Self {
        Self {
            k_min: default_k_min(),
            k_max: default_k_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoSection {
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_folds() -> usize {
    10
}

impl Default for LassoSection {
    fn default() -> Self {
        Self { folds: default_folds() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FformaSection {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_rate")]
    pub learning_rate: f64,
}

fn default_rounds() -> usize {
    100
}

fn default_depth() -> usize {
    3
}

fn default_rate() -> f64 {
    0.1
}

impl Default for FformaSection {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            max_depth: default_depth(),
            learning_rate: default_rate(),
        }
    }
}

impl FformaSection {
    pub fn params(&self) -> FformaParams {
        FformaParams {
            rounds: self.rounds,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            ..FformaParams::default()
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        cfg.dataset.path = resolve(&cfg.dataset.path);
        cfg.output_dir = resolve(&cfg.output_dir);
        cfg.cache_dir = cfg.cache_dir.as_deref().map(resolve);
        Ok(cfg)
    }

    /// Methods in report order.
    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for name in &self.methods {
            let m: Method = name
                .parse()
                .map_err(|_| Error::config("methods", format!("unknown method `{name}`")))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn impute_policy(&self) -> Result<ImputePolicy> {
        self.dataset
            .impute
            .parse()
            .map_err(|e: Error| Error::config("dataset.impute", e.to_string()))
    }

    pub fn smape_variant(&self) -> SmapeVariant {
        self.dataset.smape_variant.unwrap_or(
            match canonical_dataset_name(&self.dataset.name) {
                Some("Kaggle") | Some("Traffic") => SmapeVariant::Suilin,
                _ => SmapeVariant::Standard,
            },
        )
    }

    /// Canonical text used for hashing.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks method names, dependency closure and dataset/horizon consistency.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |field: &str, message: String| {
        out.push(Diagnostic {
            field: field.into(),
            message,
        })
    };
    if cfg.methods.is_empty() {
        push("methods", "method list is empty".into());
    }
    let mut methods = Vec::new();
    for (i, name) in cfg.methods.iter().enumerate() {
        match name.parse::<Method>() {
            Ok(m) => methods.push(m),
            Err(_) => push(&format!("methods[{i}]"), format!("unknown method `{name}`")),
        }
    }
    let missing_base: Vec<&str> = Method::BASE
        .iter()
        .filter(|b| !methods.contains(b))
        .map(|b| b.name())
        .collect();
    for m in methods.iter().filter(|m| m.is_combiner()) {
        if !missing_base.is_empty() {
            push(
                "methods",
                format!(
                    "{} requires all four base models; missing {}",
                    m.name(),
                    missing_base.join(", ")
                ),
            );
        }
    }
    if cfg.dataset.horizon == 0 {
        push("dataset.horizon", "must be at least 1".into());
    }
    if let Some(h) = table_horizon(&cfg.dataset.name) {
        if h != cfg.dataset.horizon {
            push(
                "dataset.horizon",
                format!("dataset `{}` uses horizon {h}, got {}", cfg.dataset.name, cfg.dataset.horizon),
            );
        }
    }
    if cfg.dataset.block == Some(0) {
        push("dataset.block", "must be at least 1".into());
    }
    if let Err(e) = cfg.dataset.impute.parse::<ImputePolicy>() {
        push("dataset.impute", e.to_string());
    }
    if cfg.rnn.budget == 0 {
        push("rnn.budget", "must be at least 1".into());
    }
    if cfg.dhr.k_min == 0 || cfg.dhr.k_min > cfg.dhr.k_max || cfg.dhr.k_max > MAX_FOURIER_ORDER {
        push(
            "dhr",
            format!("k range must satisfy 1 <= k_min <= k_max <= {MAX_FOURIER_ORDER}"),
        );
    }
    if cfg.lasso.folds < 2 {
        push("lasso.folds", "must be at least 2".into());
    }
    if cfg.fforma.rounds == 0 || cfg.fforma.max_depth == 0 || !(cfg.fforma.learning_rate > 0.0) {
        push("fforma", "rounds, max_depth and learning_rate must be positive".into());
    }
    out
}

/// Turns diagnostics into a single config error.
pub fn check_config(cfg: &ExperimentConfig) -> Result<()> {
    let diags = validate_config(cfg);
    match diags.first() {
        None => Ok(()),
        Some(first) => Err(Error::Config {
            field: first.field.clone(),
            message: diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        }),
    }
}
