//! Experiment harness: configuration, Monte Carlo and exact convergence
//! runs, report encoding and the validation suite.

pub mod config;
pub mod report;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, MRule, Pair, Tolerances};
pub use report::{emit_report, parse_report_json, parse_rows_csv, write_report, CovReport, Format, Row, REPORT_VERSION};
pub use run::{run_convergence_table, run_mc_experiment, theory_values, RunOptions};
pub use validate::{run_validation_suite, Profile, ValidationReport};
