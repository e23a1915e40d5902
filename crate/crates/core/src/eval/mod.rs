//! Accuracy metrics, significance tests, oracle ablation and reports.

pub mod friedman;
pub mod metrics;
pub mod oracle;
pub mod report;

pub use friedman::{friedman_test, hochberg_posthoc, FriedmanResult, PosthocResult};
pub use metrics::{aggregate, mase, select_mase_benchmark, smape, EvaluationContext, SmapeVariant};
pub use oracle::{oracle_study, OracleStudyResult};
pub use report::EvalReport;
