use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weekcast::eval::report::{format_machine_readable, format_results_table, format_significance_table};
use weekcast::experiment::{aggregate_file, evaluate_directory, run_experiment, validate_config, ExperimentConfig};

#[derive(Parser)]
#[command(name = "weekcast", version, about = "Weekly forecasting experiments")]
struct Cli {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-series fitting (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Only validate the config.
        #[arg(long)]
        check: bool,
    },
    /// Impute and block-sum a dataset file into weekly totals.
    Aggregate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        block: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a directory of forecast tables against a dataset's final horizon.
    Evaluate {
        #[arg(long)]
        forecasts: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Use the naive lag-1 MASE benchmark.
        #[arg(long)]
        non_seasonal: bool,
        /// Print `dataset,method,metric,value` rows instead of tables.
        #[arg(long)]
        csv: bool,
    },
}

fn run(cli: Cli) -> weekcast::Result<()> {
    match cli.command {
        Command::Run { config, check } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let diags = validate_config(&cfg);
            for d in &diags {
                eprintln!("error: {d}");
            }
            if check || !diags.is_empty() {
                return weekcast::experiment::check_config(&cfg);
            }
            let outcome = run_experiment(&cfg)?;
            print!("{}", format_results_table(std::slice::from_ref(&outcome.report)));
            eprintln!(
                "wrote {} (cache hits {}/{})",
                outcome.output_dir.display(),
                outcome.manifest.cache_hits,
                outcome.manifest.cache_lookups
            );
        }
        Command::Aggregate { input, block, out } => {
            let n = aggregate_file(&input, block, &out)?;
            eprintln!("aggregated {n} series into {}", out.display());
        }
        Command::Evaluate {
            forecasts,
            dataset,
            non_seasonal,
            csv,
        } => {
            let report = evaluate_directory(&forecasts, &dataset, !non_seasonal)?;
            let reports = std::slice::from_ref(&report);
            if csv {
                print!("{}", format_machine_readable(reports));
            } else {
                print!("{}", format_results_table(reports));
                if report.friedman.is_some() {
                    print!("\n{}", format_significance_table(&report));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
