mod common;

use weekcast::experiment::{aggregate_file, evaluate_directory, run_experiment, validate_config, ExperimentConfig};
use weekcast::series::io::read_dataset;

#[test]
fn combiner_without_base_models_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::synthetic_daily(2, 791, 1);
    let path = common::write_experiment(dir.path(), &data, "NN5", 8, 1, &["Theta", "Average"]);
    let cfg = ExperimentConfig::load(&path).unwrap();
    let diags = validate_config(&cfg);
    assert!(!diags.is_empty());
    let text = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n");
    for missing in ["TBATS", "DHR-ARIMA", "RNN"] {
        assert!(text.contains(missing), "{text}");
    }
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn wrong_horizon_for_known_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::synthetic_daily(2, 791, 1);
    let path = common::write_experiment(dir.path(), &data, "NN5", 13, 1, &["Theta"]);
    let diags = validate_config(&ExperimentConfig::load(&path).unwrap());
    assert!(diags.iter().any(|d| d.field.contains("horizon")), "{diags:?}");
}

#[test]
fn aggregate_writes_weekly_totals() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("daily.txt");
    let out = dir.path().join("weekly.txt");
    std::fs::write(&input, common::synthetic_daily(3, 791, 4)).unwrap();
    assert_eq!(aggregate_file(&input, 7, &out).unwrap(), 3);
    let weekly = read_dataset::<f64>(&out).unwrap();
    assert!(weekly.series.iter().all(|s| s.values.len() == 113));
    assert!(weekly.series.iter().flat_map(|s| &s.values).all(|v| v.is_some()));
}

#[test]
fn single_model_run_caches_and_re_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::synthetic_daily(4, 791, 12);
    let path = common::write_experiment(dir.path(), &data, "NN5", 8, 1, &["Theta"]);
    let cfg = ExperimentConfig::load(&path).unwrap();
    let first = run_experiment(&cfg).unwrap();
    assert_eq!(first.manifest.cache_hits, 0);
    let theta = first.report.method("Theta").and_then(|m| m.mean_smape).unwrap();
    assert!(theta.is_finite() && theta > 0.0);

    let second = run_experiment(&cfg).unwrap();
    assert!(second.manifest.cache_lookups > 0);
    assert_eq!(second.manifest.cache_hits, second.manifest.cache_lookups);

    let report = evaluate_directory(&first.output_dir.join("forecasts"), &dir.path().join("data.txt"), true).unwrap();
    let again = report.method("Theta").and_then(|m| m.mean_smape).unwrap();
    assert!((again - theta).abs() < 1e-9, "{again} vs {theta}");
}
