//! The end-to-end pipeline: data preparation, cached base-model stages,
//! combiners, evaluation and report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::cache::{sha256_hex, CacheKey, CacheMeta, ForecastCache, Stage, CACHE_DIR_ENV};
use super::config::{check_config, ExperimentConfig};
use super::method::Method;
use crate::combine::features::format_feature_table;
use crate::combine::{
    average_combine, extract_features, fforma_predict, fforma_train, lasso_stack_predict, lasso_stack_train,
    rows_to_series, FeatureVector, ForecastMatrix, LassoStack, LassoVariant,
};
use crate::error::{Error, Result};
use crate::eval::report::{
    format_machine_readable, format_oracle_table, format_results_table, format_significance_table,
    format_weights_table, report_weights, MethodForecasts,
};
use crate::eval::{select_mase_benchmark, smape, EvalReport, EvaluationContext, SmapeVariant};
use crate::models::cache::ForecastTable;
use crate::models::dhr::{max_order_for_length, select_order};
use crate::models::{
    dhr_forecast_series, repeat_last, tbats_forecast_series, theta_forecast_series, ProviderForecast, ProviderId,
};
use crate::rnn::{rnn_fit_forecast, rnn_tune, RnnConfig};
use crate::series::io::{format_dataset, read_dataset};
use crate::series::{aggregate_blocks, impute_missing, split_last_h, Granularity, WeeklyDataset};

/// Seed offsets of the two final RNN trainings, relative to the run seed.
const RNN_VALIDATION_SEED_OFFSET: u64 = 1_000;
const RNN_TEST_SEED_OFFSET: u64 = 2_000;

/// A dataset after imputation, aggregation and both hold-out splits.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: WeeklyDataset<f64>,
    pub series_ids: Vec<String>,
    /// Everything but the test window.
    pub training: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    /// Training series minus the validation window.
    pub training_part: Vec<Vec<f64>>,
    pub validation: Vec<Vec<f64>>,
    pub hash: String,
}

impl PreparedData {
    pub fn new(dataset: WeeklyDataset<f64>) -> Result<Self> {
        let h = dataset.horizon;
        let mut training = Vec::with_capacity(dataset.len());
        let mut test = Vec::with_capacity(dataset.len());
        let mut training_part = Vec::with_capacity(dataset.len());
        let mut validation = Vec::with_capacity(dataset.len());
        for s in &dataset.series {
            let outer = split_last_h(&s.values, h)?;
            let inner = split_last_h(&outer.training, h)?;
            training.push(outer.training);
            test.push(outer.validation);
            training_part.push(inner.training);
            validation.push(inner.validation);
        }
        let mut text = format_dataset(&dataset.name, Granularity::Weekly, None, &dataset.series);
        text.push_str(&format!("horizon={h}\n"));
        Ok(Self {
            series_ids: dataset.series.iter().map(|s| s.id.clone()).collect(),
            hash: sha256_hex(text.as_bytes()),
            dataset,
            training,
            test,
            training_part,
            validation,
        })
    }

    pub fn horizon(&self) -> usize {
        self.dataset.horizon
    }
}

/// Reads, imputes and block-aggregates the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<WeeklyDataset<f64>> {
    let file = read_dataset::<f64>(&cfg.dataset.path)?;
    let policy = cfg.impute_policy()?;
    let block = cfg.dataset.block.unwrap_or(file.granularity.block_size());
    let series = file
        .series
        .iter()
        .map(|raw| aggregate_blocks(&impute_missing(raw, policy)?, block))
        .collect::<Result<Vec<_>>>()?;
    if series.is_empty() {
        return Err(Error::Data(format!("{} contains no series", cfg.dataset.path.display())));
    }
    WeeklyDataset::new(cfg.dataset.name.clone(), series, cfg.dataset.horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_hit: Option<bool>,
    pub started_ms: u128,
    pub finished_ms: u128,
}

/// Squared error of the log-space single stack on the validation window,
/// next to that of the equal-weight average of the same log forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationFit {
    pub stack_sse: f64,
    pub average_sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub dataset_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub cache_hits: usize,
    pub cache_lookups: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dhr_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rnn_config: Option<RnnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_fit: Option<ValidationFit>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Data(e.to_string()))
    }
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub manifest: RunManifest,
    pub forecasts: BTreeMap<Method, Vec<Vec<f64>>>,
    pub output_dir: PathBuf,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Explicit config setting, then the environment, then `<output_dir>/cache`.
pub fn cache_root(cfg: &ExperimentConfig) -> PathBuf {
    cfg.cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output_dir.join("cache"))
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a PreparedData,
    cache: ForecastCache,
    variant: SmapeVariant,
    manifest: RunManifest,
}

fn tabulate(ids: &[String], h: usize, forecasts: Vec<ProviderForecast>) -> Result<(ForecastTable, Option<usize>)> {
    let fallbacks = forecasts.iter().filter(|f| f.fallback).count();
    let rows = ids.iter().cloned().zip(forecasts.into_iter().map(|f| f.values)).collect();
    Ok((ForecastTable::new(h, rows)?, Some(fallbacks)))
}

fn rnn_outputs(series: &[Vec<f64>], forecasts: Vec<Option<Vec<f64>>>, h: usize) -> Vec<ProviderForecast> {
    series
        .iter()
        .zip(forecasts)
        .map(|(y, f)| match f {
            Some(values) => ProviderForecast { values, fallback: false },
            None => ProviderForecast {
                values: repeat_last(y, h),
                fallback: true,
            },
        })
        .collect()
}

impl Runner<'_> {
    fn inputs(&self, stage: Stage) -> &[Vec<f64>] {
        match stage {
            Stage::Validation => &self.data.training_part,
            Stage::Test => &self.data.training,
        }
    }

    fn period(&self) -> f64 {
        self.data.dataset.seasonal_period_real
    }

    fn base_rnn_config(&self) -> RnnConfig {
        RnnConfig {
            optimizer: self.cfg.rnn.optimizer,
            ..RnnConfig::for_horizon(self.data.horizon(), self.cfg.rnn.mode)
        }
    }

    fn provider_config(&self, provider: ProviderId, stage: Stage, dhr_k: Option<usize>, rnn: Option<&RnnConfig>) -> String {
        match (provider, stage) {
            (ProviderId::Theta, _) => "theta".into(),
            (ProviderId::Tbats, _) => format!("tbats;period={}", self.period()),
            (ProviderId::DhrArima, Stage::Validation) => format!(
                "dhr_arima;k={}..{};period={};smape={:?}",
                self.cfg.dhr.k_min,
                self.cfg.dhr.k_max,
                self.period(),
                self.variant
            ),
            (ProviderId::DhrArima, Stage::Test) => {
                format!("dhr_arima;k={};period={}", dhr_k.unwrap_or(0), self.period())
            }
            (ProviderId::Rnn, Stage::Validation) => format!(
                "rnn;budget={};base={};smape={:?}",
                self.cfg.rnn.budget,
                serde_json::to_string(&self.base_rnn_config()).expect("config serialises"),
                self.variant
            ),
            (ProviderId::Rnn, Stage::Test) => format!(
                "rnn;config={}",
                serde_json::to_string(&rnn.copied().unwrap_or_else(|| self.base_rnn_config()))
                    .expect("config serialises")
            ),
        }
    }

    fn compute(&self, provider: ProviderId, stage: Stage, provider_config: &str, meta_in: &CacheMeta) -> Result<(ForecastTable, CacheMeta)> {
        let h = self.data.horizon();
        let ids = &self.data.series_ids;
        let inputs = self.inputs(stage);
        let period = self.period();
        let mut meta = CacheMeta {
            provider_config: provider_config.to_string(),
            ..CacheMeta::default()
        };
        let (table, fallbacks) = match (provider, stage) {
            (ProviderId::Theta, _) => tabulate(ids, h, crate::par_map(inputs, |y| theta_forecast_series(y, h)))?,
            (ProviderId::Tbats, _) => {
                tabulate(ids, h, crate::par_map(inputs, |y| tbats_forecast_series(y, h, period)))?
            }
            (ProviderId::DhrArima, Stage::Validation) => {
                let longest = self.data.training_part.iter().map(Vec::len).max().unwrap_or(0);
                let cap = max_order_for_length(longest, period).max(self.cfg.dhr.k_min);
                let candidates: Vec<usize> = (self.cfg.dhr.k_min..=self.cfg.dhr.k_max.min(cap)).collect();
                let search = select_order(&self.data.training, h, period, &candidates, self.variant)?;
                log::info!("DHR-ARIMA: selected Fourier order k = {}", search.k);
                meta.dhr_order = Some(search.k);
                let rows = ids.iter().cloned().zip(search.validation_forecasts).collect();
                (ForecastTable::new(h, rows)?, None)
            }
            (ProviderId::DhrArima, Stage::Test) => {
                let k = meta_in.dhr_order.expect("validation stage sets the order");
                meta.dhr_order = Some(k);
                tabulate(ids, h, crate::par_map(inputs, |y| dhr_forecast_series(y, h, period, k)))?
            }
            (ProviderId::Rnn, Stage::Validation) => {
                let base = self.base_rnn_config();
                let tuned = rnn_tune(inputs, &base, self.cfg.rnn.budget, self.cfg.seed, self.variant)?;
                log::info!("RNN: best of {} trials", tuned.trials.len());
                let fit = rnn_fit_forecast(inputs, &tuned.config, self.cfg.seed + RNN_VALIDATION_SEED_OFFSET)?;
                meta.rnn_config = Some(tuned.config);
                tabulate(ids, h, rnn_outputs(inputs, fit.forecasts, h))?
            }
            (ProviderId::Rnn, Stage::Test) => {
                let config = meta_in.rnn_config.expect("validation stage sets the config");
                let fit = rnn_fit_forecast(inputs, &config, self.cfg.seed + RNN_TEST_SEED_OFFSET)?;
                meta.rnn_config = Some(config);
                tabulate(ids, h, rnn_outputs(inputs, fit.forecasts, h))?
            }
        };
        meta.fallbacks = fallbacks;
        if let Some(n) = fallbacks.filter(|&n| n > 0) {
            log::warn!("{provider} ({stage}): {n} series fell back to the last value");
        }
        Ok((table, meta))
    }

    /// Loads a stage from the cache or computes and stores it.
    fn provider_stage(&mut self, provider: ProviderId, stage: Stage, prior: &CacheMeta) -> Result<(ForecastTable, CacheMeta)> {
        let started_ms = now_ms();
        let provider_config = self.provider_config(provider, stage, prior.dhr_order, prior.rnn_config.as_ref());
        let key = CacheKey {
            dataset_hash: self.data.hash.clone(),
            provider,
            stage,
            provider_config: provider_config.clone(),
            seed: self.cfg.seed,
        };
        self.manifest.cache_lookups += 1;
        let (table, meta, hit) = match self.cache.load(&key, &self.data.series_ids, self.data.horizon())? {
            Some((t, m)) => {
                log::info!("{provider} ({stage}): cache hit");
                (t, m, true)
            }
            None => {
                log::info!("{provider} ({stage}): fitting");
                let (t, m) = self.compute(provider, stage, &provider_config, prior)?;
                self.cache.store(&key, &t, &m)?;
                (t, m, false)
            }
        };
        if hit {
            self.manifest.cache_hits += 1;
        }
        self.manifest.stages.push(StageRecord {
            stage: format!("{}_{}", provider.key(), stage),
            cache_hit: Some(hit),
            started_ms,
            finished_ms: now_ms(),
        });
        Ok((table, meta))
    }

    fn record(&mut self, stage: &str, started_ms: u128) {
        self.manifest.stages.push(StageRecord {
            stage: stage.to_string(),
            cache_hit: None,
            started_ms,
            finished_ms: now_ms(),
        });
    }
}

fn features_for(series: &[Vec<f64>]) -> Result<Vec<FeatureVector>> {
    crate::par_map(series, |y| extract_features(y)).into_iter().collect()
}

fn feature_map(ids: &[String], features: &[FeatureVector]) -> BTreeMap<String, FeatureVector> {
    ids.iter().cloned().zip(features.iter().cloned()).collect()
}

/// Validation-window squared errors of the log-space single stack and of the
/// equal-weight average, both measured in the stack's log space.
pub fn validation_fit(stack: &LassoStack, fm: &ForecastMatrix<f64>) -> Option<ValidationFit> {
    if stack.variant != LassoVariant::SingleLog {
        return None;
    }
    let t = stack.transform.as_ref()?;
    let actuals = fm.actuals.as_ref()?;
    let fit = stack.fits.first()?;
    let m = fm.models.len() as f64;
    let mut stack_sse = 0.0;
    let mut average_sse = 0.0;
    for (row, &y) in fm.values.iter().zip(actuals) {
        let z: Vec<f64> = row.iter().map(|&v| t.forward(v)).collect();
        let target = t.forward(y);
        stack_sse += (fit.predict(&z) - target).powi(2);
        average_sse += (z.iter().sum::<f64>() / m - target).powi(2);
    }
    Some(ValidationFit { stack_sse, average_sse })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn forecast_table(ids: &[String], forecasts: &[Vec<f64>], h: usize) -> Result<ForecastTable> {
    ForecastTable::new(h, ids.iter().cloned().zip(forecasts.iter().cloned()).collect())
}

/// Runs the configured experiment and writes every artefact under
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    check_config(cfg)?;
    let methods = cfg.parsed_methods()?;
    let started = now_ms();
    let data = PreparedData::new(load_dataset(cfg)?)?;
    let h = data.horizon();
    log::info!(
        "{}: {} series, {} weeks minimum, horizon {h}",
        data.dataset.name,
        data.dataset.len(),
        data.dataset.min_len()
    );
    let seeds = BTreeMap::from([
        ("run".to_string(), cfg.seed),
        ("rnn_tuning".to_string(), cfg.seed),
        ("rnn_validation".to_string(), cfg.seed + RNN_VALIDATION_SEED_OFFSET),
        ("rnn_test".to_string(), cfg.seed + RNN_TEST_SEED_OFFSET),
        ("lasso_cv".to_string(), cfg.seed),
    ]);
    let mut runner = Runner {
        cfg,
        data: &data,
        cache: ForecastCache::new(cache_root(cfg)),
        variant: cfg.smape_variant(),
        manifest: RunManifest {
            config_hash: sha256_hex(cfg.canonical().as_bytes()),
            dataset_hash: data.hash.clone(),
            seeds,
            stages: Vec::new(),
            cache_hits: 0,
            cache_lookups: 0,
            dhr_order: None,
            rnn_config: None,
            validation_fit: None,
        },
    };
    runner.record("prepare", started);

    let needs_all = methods.iter().any(|m| m.is_combiner());
    let providers: Vec<ProviderId> = ProviderId::ALL
        .into_iter()
        .filter(|p| needs_all || methods.iter().any(|m| m.provider() == Some(*p)))
        .collect();
    let mut validation_tables = Vec::new();
    let mut test_tables = Vec::new();
    for &p in &providers {
        let (vt, vmeta) = runner.provider_stage(p, Stage::Validation, &CacheMeta::default())?;
        let (tt, tmeta) = runner.provider_stage(p, Stage::Test, &vmeta)?;
        if let Some(k) = tmeta.dhr_order {
            runner.manifest.dhr_order = Some(k);
        }
        if let Some(c) = tmeta.rnn_config {
            runner.manifest.rnn_config = Some(c);
        }
        validation_tables.push((p, vt));
        test_tables.push((p, tt));
    }

    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;
    let mut forecasts: BTreeMap<Method, Vec<Vec<f64>>> = BTreeMap::new();
    for (p, table) in &test_tables {
        let m = Method::BASE.into_iter().find(|m| m.provider() == Some(*p)).expect("base method");
        if methods.contains(&m) {
            let rows = data.series_ids.iter().map(|id| table.get(id).expect("cached ids checked").to_vec()).collect();
            forecasts.insert(m, rows);
        }
    }

    let mut weights = None;
    if needs_all {
        let started = now_ms();
        let vrefs: Vec<(ProviderId, &ForecastTable)> = validation_tables.iter().map(|(p, t)| (*p, t)).collect();
        let trefs: Vec<(ProviderId, &ForecastTable)> = test_tables.iter().map(|(p, t)| (*p, t)).collect();
        let fm_val = ForecastMatrix::from_tables(&vrefs, &data.series_ids, Some(&data.validation))?;
        let fm_test = ForecastMatrix::from_tables(&trefs, &data.series_ids, Some(&data.test))?;

        let (train_features, test_features) = if methods.iter().any(|m| m.needs_features()) {
            let tr = features_for(&data.training_part)?;
            let te = features_for(&data.training)?;
            write(&out.join("features_train.csv"), &format_feature_table(&feature_map(&data.series_ids, &tr)))?;
            write(&out.join("features_test.csv"), &format_feature_table(&feature_map(&data.series_ids, &te)))?;
            (Some(tr), Some(te))
        } else {
            (None, None)
        };

        for &m in methods.iter().filter(|m| m.is_combiner()) {
            let combined = match m {
                Method::Average => Some(average_combine(&fm_test)),
                Method::FformaOriginal => {
                    log::warn!("FFORMA_Original is not available; reported as NA");
                    None
                }
                Method::FformaModified => {
                    let tr = train_features.as_deref().expect("features computed");
                    let te = test_features.as_deref().expect("features computed");
                    let losses = (0..fm_val.n_series())
                        .map(|s| {
                            (0..fm_val.models.len())
                                .map(|j| smape(&fm_val.series_forecasts(s, j), &data.validation[s], runner.variant))
                                .collect::<Result<Vec<f64>>>()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let model = fforma_train(tr, &losses, cfg.fforma.params())?;
                    write(&out.join("combiners").join("FFORMA_Modified.txt"), &model.to_text())?;
                    Some(fforma_predict(&model, te, &fm_test)?)
                }
                _ => {
                    let variant = m.lasso_variant().expect("lasso method");
                    let (tr, te) = if variant.with_features() {
                        (train_features.as_deref(), test_features.as_deref())
                    } else {
                        (None, None)
                    };
                    let stack = lasso_stack_train(&fm_val, tr, variant, cfg.lasso.folds, cfg.seed)?;
                    write(&out.join("combiners").join(format!("{}.txt", m.name())), &stack.to_text())?;
                    if variant == LassoVariant::SingleLog {
                        let names: Vec<&str> = stack.models.iter().map(|p| p.name()).collect();
                        weights = Some(report_weights(&names, &stack.fits[0].weights));
                        runner.manifest.validation_fit = validation_fit(&stack, &fm_val);
                    }
                    Some(lasso_stack_predict(&stack, &fm_test, te)?)
                }
            };
            if let Some(flat) = combined {
                forecasts.insert(m, rows_to_series(&flat, h));
            }
        }
        runner.record("combiners", started);
    }

    let started = now_ms();
    let lag = select_mase_benchmark(&data.dataset.name, cfg.dataset.seasonal, data.training.iter().map(Vec::len).min().unwrap_or(0));
    let ctx = EvaluationContext::new(lag, runner.variant);
    let method_rows: Vec<MethodForecasts<'_>> = methods
        .iter()
        .map(|m| MethodForecasts {
            name: m.name(),
            forecasts: forecasts.get(m).map(Vec::as_slice),
        })
        .collect();
    let base_names: Vec<&str> = if needs_all || Method::BASE.iter().all(|b| methods.contains(b)) {
        ProviderId::ALL.iter().map(|p| p.name()).collect()
    } else {
        Vec::new()
    };
    let mut report = EvalReport::build(
        &data.dataset.name,
        &data.series_ids,
        &method_rows,
        &data.test,
        &data.training,
        &ctx,
        &base_names,
    )?;
    report.weights = weights;
    runner.record("evaluate", started);

    std::fs::create_dir_all(out.join("forecasts"))?;
    for (m, f) in &forecasts {
        forecast_table(&data.series_ids, f, h)?.write(&out.join("forecasts").join(format!("{}.csv", m.name())))?;
    }
    let reports = std::slice::from_ref(&report);
    write(&out.join("results.txt"), &format_results_table(reports))?;
    write(&out.join("results.csv"), &format_machine_readable(reports))?;
    if report.oracle_smape.is_some() {
        write(&out.join("oracle.txt"), &format_oracle_table(reports))?;
    }
    if report.weights.is_some() {
        write(&out.join("weights.txt"), &format_weights_table(reports))?;
    }
    if report.friedman.is_some() {
        write(&out.join("significance.txt"), &format_significance_table(&report))?;
    }
    let manifest = runner.manifest;
    write(
        &out.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).map_err(|e| Error::Data(e.to_string()))? + "\n"),
    )?;
    log::info!("cache hits: {}/{}", manifest.cache_hits, manifest.cache_lookups);
    Ok(RunOutcome {
        report,
        manifest,
        forecasts,
        output_dir: out.clone(),
    })
}

/// Scores every `*.csv` forecast table in `dir` against the final horizon of
/// each series in a weekly dataset file. The horizon is taken from the tables.
pub fn evaluate_directory(dir: &Path, dataset_path: &Path, seasonal: bool) -> Result<EvalReport> {
    let file = read_dataset::<f64>(dataset_path)?;
    let series: Vec<Vec<f64>> = file
        .series
        .iter()
        .map(|raw| {
            let ts = impute_missing(raw, crate::series::ImputePolicy::Median)?;
            Ok(aggregate_blocks(&ts, file.granularity.block_size())?.values)
        })
        .collect::<Result<_>>()?;
    let ids: Vec<String> = file.series.iter().map(|s| s.id.clone()).collect();

    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no forecast tables in {}", dir.display())));
    }
    let mut tables: Vec<(String, ForecastTable)> = Vec::new();
    for p in &paths {
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        tables.push((name, ForecastTable::read(p)?));
    }
    tables.sort_by_key(|(name, _)| (name.parse::<Method>().map_or(Method::ALL.len(), |m| m as usize), name.clone()));
    let h = tables[0].1.horizon;
    if let Some((name, _)) = tables.iter().find(|(_, t)| t.horizon != h) {
        return Err(Error::Data(format!("{name} uses a different horizon from the other tables")));
    }

    let mut training = Vec::with_capacity(ids.len());
    let mut actuals = Vec::with_capacity(ids.len());
    for s in &series {
        let sp = split_last_h(s, h)?;
        training.push(sp.training);
        actuals.push(sp.validation);
    }
    let mut rows: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (name, t) in &tables {
        let f = ids
            .iter()
            .map(|id| {
                t.get(id)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| Error::Data(format!("{name} has no forecasts for series `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((name.clone(), f));
    }
    let methods: Vec<MethodForecasts<'_>> = rows
        .iter()
        .map(|(name, f)| MethodForecasts {
            name,
            forecasts: Some(f),
        })
        .collect();
    let present: Vec<&str> = ProviderId::ALL
        .iter()
        .map(|p| p.name())
        .filter(|n| rows.iter().any(|(r, _)| r == n))
        .collect();
    let base: Vec<&str> = if present.len() == ProviderId::ALL.len() { present } else { Vec::new() };
    let variant = match crate::series::canonical_dataset_name(&file.id) {
        Some("Kaggle") | Some("Traffic") => SmapeVariant::Suilin,
        _ => SmapeVariant::Standard,
    };
    let lag = select_mase_benchmark(&file.id, seasonal, training.iter().map(Vec::len).min().unwrap_or(0));
    EvalReport::build(&file.id, &ids, &methods, &actuals, &training, &EvaluationContext::new(lag, variant), &base)
}

/// Imputes and block-sums a dataset file into a weekly dataset file.
pub fn aggregate_file(input: &Path, block: usize, out: &Path) -> Result<usize> {
    let file = read_dataset::<f64>(input)?;
    let series = file
        .series
        .iter()
        .map(|raw| aggregate_blocks(&impute_missing(raw, crate::series::ImputePolicy::Median)?, block))
        .collect::<Result<Vec<_>>>()?;
    write(
        out,
        &format_dataset(&file.id, Granularity::Weekly, file.start_timestamp.as_deref(), &series),
    )?;
    Ok(series.len())
}
