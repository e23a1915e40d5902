use std::path::Path;
use std::process::{Command, Output};

fn weekcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weekcast"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

/// Three daily series of 791 days with a weekday pattern.
fn write_daily(path: &Path) {
    let mut text = String::from("demo,daily,2000-01-03\n");
    for s in 0..3 {
        let values: Vec<String> = (0..791)
            .map(|d| format!("{:.2}", 20.0 + 5.0 * s as f64 + ((d % 7) as f64) * 1.5 + ((d * 37 + s) % 11) as f64 * 0.3))
            .collect();
        text.push_str(&format!("T{s}:{}\n", values.join(",")));
    }
    std::fs::write(path, text).unwrap();
}

fn write_config(dir: &Path, methods: &str) -> String {
    write_daily(&dir.join("data.txt"));
    let cfg = format!(
        "methods = [{methods}]\noutput_dir = \"out\"\n\n[dataset]\npath = \"data.txt\"\nname = \"NN5\"\nhorizon = 8\n"
    );
    let path = dir.join("exp.toml");
    std::fs::write(&path, cfg).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_reports_missing_dependencies_with_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\"Theta\", \"Average\"");
    let out = weekcast(&["run", "--config", &cfg, "--check"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("TBATS"), "{stderr}");
}

#[test]
fn check_accepts_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\"Theta\"");
    let out = weekcast(&["run", "--config", &cfg, "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_is_an_io_error() {
    let out = weekcast(&["aggregate", "--input", "/nonexistent/daily.txt", "--block", "7", "--out", "/tmp/never.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_then_evaluate_forecasts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\"Theta\"");
    let out = weekcast(&["--jobs", "1", "run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Theta"));

    let forecasts = dir.path().join("out").join("forecasts");
    let data = dir.path().join("data.txt");
    let out = weekcast(&[
        "evaluate",
        "--forecasts",
        forecasts.to_str().unwrap(),
        "--dataset",
        data.to_str().unwrap(),
        "--csv",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.contains("Theta") && l.contains("smape")), "{stdout}");
}

#[test]
fn aggregate_to_weekly() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("daily.txt");
    let output = dir.path().join("weekly.txt");
    write_daily(&input);
    let out = weekcast(&["aggregate", "--input", input.to_str().unwrap(), "--block", "7", "--out", output.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&output).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first.split(':').nth(1).unwrap().split(',').count(), 113);
}
