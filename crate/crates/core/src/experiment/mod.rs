//! Configuration-driven experiment runs.

pub mod cache;
pub mod config;
pub mod method;
pub mod runner;

pub use cache::{CacheKey, ForecastCache, Stage, CACHE_DIR_ENV};
pub use config::{check_config, validate_config, Diagnostic, ExperimentConfig};
pub use method::Method;
pub use runner::{
    aggregate_file, evaluate_directory, load_dataset, run_experiment, PreparedData, RunManifest, RunOutcome,
    ValidationFit,
};
