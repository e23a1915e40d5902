//! Per-dataset evaluation of every method and the text/CSV report emitters.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::friedman::{friedman_test, hochberg_posthoc, FriedmanResult, PosthocResult};
use super::metrics::{aggregate, mase, smape_with_epsilon, EvaluationContext};
use super::oracle::{oracle_study, OracleStudyResult};
use crate::error::{Error, Result};

pub const HOCHBERG_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub name: String,
    /// `None` when the method was not run (reported as NA).
    pub smape: Option<Vec<f64>>,
    /// Per-series MASE; `None` entries are series with an undefined scale.
    pub mase: Option<Vec<Option<f64>>>,
    pub mean_smape: Option<f64>,
    pub median_smape: Option<f64>,
    pub mean_mase: Option<f64>,
    pub median_mase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub series_ids: Vec<String>,
    pub methods: Vec<MethodResult>,
    pub friedman: Option<FriedmanResult>,
    /// Names of the methods entering the rank test, in test column order.
    pub ranked_methods: Vec<String>,
    pub posthoc: Option<PosthocResult>,
    pub oracle_smape: Option<OracleStudyResult>,
    pub oracle_mase: Option<OracleStudyResult>,
    /// Stacking weights per base model, when a single-model log stack was fitted.
    pub weights: Option<Vec<(String, f64)>>,
}

/// Forecasts of one method for every series, or `None` if not available.
pub struct MethodForecasts<'a> {
    pub name: &'a str,
    pub forecasts: Option<&'a [Vec<f64>]>,
}

impl EvalReport {
    /// Scores every method, runs the rank tests over the available methods
    /// and the oracle study over `base_models`.
    pub fn build(
        dataset: &str,
        series_ids: &[String],
        methods: &[MethodForecasts<'_>],
        actuals: &[Vec<f64>],
        training: &[Vec<f64>],
        ctx: &EvaluationContext,
        base_models: &[&str],
    ) -> Result<Self> {
        let n = series_ids.len();
        if actuals.len() != n || training.len() != n {
            return Err(Error::InvalidInput("actuals/training do not match series".into()));
        }
        let mut results = Vec::with_capacity(methods.len());
        for m in methods {
            let Some(fc) = m.forecasts else {
                results.push(MethodResult {
                    name: m.name.to_string(),
                    smape: None,
                    mase: None,
                    mean_smape: None,
                    median_smape: None,
                    mean_mase: None,
                    median_mase: None,
                });
                continue;
            };
            if fc.len() != n {
                return Err(Error::InvalidInput(format!("{} has forecasts for {} of {n} series", m.name, fc.len())));
            }
            let mut s = Vec::with_capacity(n);
            let mut q = Vec::with_capacity(n);
            for i in 0..n {
                s.push(smape_with_epsilon(&fc[i], &actuals[i], ctx.smape_variant, ctx.epsilon)?);
                q.push(match mase(&fc[i], &actuals[i], &training[i], ctx.seasonal_lag) {
                    Ok(v) => Some(v),
                    Err(Error::UndefinedMase) => None,
                    Err(e) => return Err(e),
                });
            }
            let defined: Vec<f64> = q.iter().flatten().copied().collect();
            let excluded = n - defined.len();
            if excluded > 0 {
                log::warn!("{dataset}/{}: {excluded} series with undefined MASE excluded", m.name);
            }
            let (mean_s, med_s) = aggregate(&s)?;
            let (mean_q, med_q) = match aggregate(&defined) {
                Ok((a, b)) => (Some(a), Some(b)),
                Err(_) => (None, None),
            };
            results.push(MethodResult {
                name: m.name.to_string(),
                smape: Some(s),
                mase: Some(q),
                mean_smape: Some(mean_s),
                median_smape: Some(med_s),
                mean_mase: mean_q,
                median_mase: med_q,
            });
        }

        let ranked: Vec<&MethodResult> = results.iter().filter(|r| r.smape.is_some()).collect();
        let (friedman, posthoc) = if ranked.len() >= 2 && n >= 2 {
            let errors: Vec<Vec<f64>> = (0..n)
                .map(|i| ranked.iter().map(|r| r.smape.as_ref().expect("ranked")[i]).collect())
                .collect();
            let f = friedman_test(&errors)?;
            let p = hochberg_posthoc(&f.mean_ranks, n, HOCHBERG_ALPHA)?;
            (Some(f), Some(p))
        } else {
            (None, None)
        };
        let ranked_methods = ranked.iter().map(|r| r.name.clone()).collect();

        let base: Vec<&MethodResult> = base_models
            .iter()
            .filter_map(|b| results.iter().find(|r| r.name == *b && r.smape.is_some()))
            .collect();
        let (oracle_smape, oracle_mase) = if base.len() == base_models.len() && base.len() >= 2 {
            let names: Vec<&str> = base.iter().map(|r| r.name.as_str()).collect();
            let s_err: Vec<Vec<f64>> = (0..n)
                .map(|i| base.iter().map(|r| r.smape.as_ref().expect("base")[i]).collect())
                .collect();
            let q_err: Vec<Vec<f64>> = (0..n)
                .filter_map(|i| base.iter().map(|r| r.mase.as_ref().expect("base")[i]).collect::<Option<Vec<f64>>>())
                .collect();
            let os = oracle_study(&s_err, &names)?;
            let oq = if q_err.is_empty() { None } else { Some(oracle_study(&q_err, &names)?) };
            (Some(os), oq)
        } else {
            (None, None)
        };

        Ok(Self {
            dataset: dataset.to_string(),
            series_ids: series_ids.to_vec(),
            methods: results,
            friedman,
            ranked_methods,
            posthoc,
            oracle_smape,
            oracle_mase,
            weights: None,
        })
    }

    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Hochberg-adjusted p-value of `name` against the control; `None` for
    /// the control itself or unranked methods.
    pub fn adjusted_p(&self, name: &str) -> Option<f64> {
        let post = self.posthoc.as_ref()?;
        let idx = self.ranked_methods.iter().position(|m| m == name)?;
        post.comparisons.iter().find(|c| c.method == idx).map(|c| c.adjusted_p)
    }

    pub fn control(&self) -> Option<&str> {
        self.posthoc.as_ref().map(|p| self.ranked_methods[p.control].as_str())
    }
}

/// Per-model weights of a fitted single-model stack.
pub fn report_weights(models: &[&str], weights: &[f64]) -> Vec<(String, f64)> {
    models
        .iter()
        .zip(weights)
        .map(|(m, &w)| (m.to_string(), w.max(0.0)))
        .collect()
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "NA".to_string(),
    }
}

fn header(reports: &[EvalReport], label_width: usize) -> String {
    let mut s = format!("{:>label_width$}", "");
    for r in reports {
        s.push_str(&format!(" {:>10}", r.dataset));
    }
    s.push('\n');
    s
}

fn label_width<'a>(names: impl Iterator<Item = &'a str>) -> usize {
    names.map(str::len).max().unwrap_or(0).max(6)
}

/// Method rows by dataset columns, four metric panels.
pub fn format_results_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let w = label_width(first.methods.iter().map(|m| m.name.as_str()));
    let mut out = header(reports, w);
    let panels: [(&str, usize, fn(&MethodResult) -> Option<f64>); 4] = [
        ("Mean sMAPE", 2, |m| m.mean_smape),
        ("Median sMAPE", 2, |m| m.median_smape),
        ("Mean MASE", 3, |m| m.mean_mase),
        ("Median MASE", 3, |m| m.median_mase),
    ];
    for (title, dec, get) in panels {
        let _ = writeln!(out, "{title}");
        for m in &first.methods {
            let _ = write!(out, "{:>w$}", m.name);
            for r in reports {
                let _ = write!(out, " {:>10}", fmt_opt(r.method(&m.name).and_then(get), dec));
            }
            out.push('\n');
        }
    }
    out
}

/// Oracle study: leave-one-out subsets and the full set, four metric panels.
pub fn format_oracle_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.iter().find_map(|r| r.oracle_smape.as_ref()) else {
        return String::new();
    };
    let names: Vec<String> = first.subsets.iter().map(|s| s.name.clone()).collect();
    let w = label_width(names.iter().map(String::as_str));
    let mut out = header(reports, w);
    type Get = fn(&EvalReport) -> Option<&OracleStudyResult>;
    let panels: [(&str, usize, Get, bool); 4] = [
        ("Mean sMAPE", 2, |r| r.oracle_smape.as_ref(), true),
        ("Median sMAPE", 2, |r| r.oracle_smape.as_ref(), false),
        ("Mean MASE", 3, |r| r.oracle_mase.as_ref(), true),
        ("Median MASE", 3, |r| r.oracle_mase.as_ref(), false),
    ];
    for (title, dec, get, use_mean) in panels {
        let _ = writeln!(out, "{title}");
        for name in &names {
            let _ = write!(out, "{name:>w$}");
            for r in reports {
                let v = get(r)
                    .and_then(|o| o.subsets.iter().find(|s| &s.name == name))
                    .map(|s| if use_mean { s.mean } else { s.median });
                let _ = write!(out, " {:>10}", fmt_opt(v, dec));
            }
            out.push('\n');
        }
    }
    out
}

/// Base-model weights chosen by the single log-space stack, per dataset.
pub fn format_weights_table(reports: &[EvalReport]) -> String {
    let Some(first) = reports.iter().find_map(|r| r.weights.as_ref()) else {
        return String::new();
    };
    let w = label_width(first.iter().map(|(m, _)| m.as_str()));
    let mut out = header(reports, w);
    for (model, _) in first {
        let _ = write!(out, "{model:>w$}");
        for r in reports {
            let v = r
                .weights
                .as_ref()
                .and_then(|ws| ws.iter().find(|(m, _)| m == model))
                .map(|(_, v)| *v);
            let _ = write!(out, " {:>10}", fmt_opt(v, 3));
        }
        out.push('\n');
    }
    out
}

/// Hochberg-adjusted p-values against the control, most significant last.
pub fn format_significance_table(report: &EvalReport) -> String {
    let (Some(f), Some(post)) = (&report.friedman, &report.posthoc) else {
        return String::new();
    };
    let w = label_width(report.ranked_methods.iter().map(String::as_str));
    let mut out = format!("Friedman statistic {:.4}, p-value {:.3e}\n", f.statistic, f.p_value);
    let _ = writeln!(out, "{:<w$} p_Hoch", "Model");
    let _ = writeln!(out, "{:<w$} -", report.ranked_methods[post.control]);
    let mut rows = post.comparisons.clone();
    rows.sort_by(|a, b| b.adjusted_p.total_cmp(&a.adjusted_p).then(a.method.cmp(&b.method)));
    for c in rows {
        let _ = writeln!(out, "{:<w$} {:.3e}", report.ranked_methods[c.method], c.adjusted_p);
    }
    out
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Flat `dataset,method,metric,value` rows covering every reported number.
pub fn format_machine_readable(reports: &[EvalReport]) -> String {
    let mut out = String::from("dataset,method,metric,value\n");
    for r in reports {
        let d = &r.dataset;
        for m in &r.methods {
            for (metric, v) in [
                ("mean_smape", m.mean_smape),
                ("median_smape", m.median_smape),
                ("mean_mase", m.mean_mase),
                ("median_mase", m.median_mase),
            ] {
                let _ = writeln!(out, "{d},{},{metric},{}", m.name, v.map_or("NA".into(), num));
            }
            if let Some(p) = r.adjusted_p(&m.name) {
                let _ = writeln!(out, "{d},{},hochberg_p,{}", m.name, num(p));
            }
        }
        if let Some(f) = &r.friedman {
            let _ = writeln!(out, "{d},ALL,friedman_statistic,{}", num(f.statistic));
            let _ = writeln!(out, "{d},ALL,friedman_p,{}", num(f.p_value));
        }
        for (metric, o) in [("smape", &r.oracle_smape), ("mase", &r.oracle_mase)] {
            if let Some(o) = o {
                for s in &o.subsets {
                    let _ = writeln!(out, "{d},Oracle_{},mean_{metric},{}", s.name, num(s.mean));
                    let _ = writeln!(out, "{d},Oracle_{},median_{metric},{}", s.name, num(s.median));
                }
            }
        }
        if let Some(ws) = &r.weights {
            for (m, w) in ws {
                let _ = writeln!(out, "{d},LR_S_Log_Forecasts,weight_{m},{}", num(*w));
            }
        }
    }
    out
}
