//! Experiment plumbing: configuration files, run reports with provenance,
//! the scaling and balance studies, the validation gate, and plot exports.

pub mod config;
pub mod emit;
pub mod flory;
pub mod report;
pub mod scaling;
pub mod validate;

pub use config::ExperimentConfig;
pub use emit::emit_plot_data;
pub use flory::{FloryRow, cost_of_slope, energy_of_slope, flory_optimum, penalty_of_slope, run_flory_balance};
pub use report::{
    ControlRow, FitSummary, GammaTrendRow, PointReport, RunReport, autocorrelation_ess,
    canonical_jsonl, canonical_jsonl_file, read_report_file, read_report_jsonl,
    write_report_file, write_report_jsonl,
};
pub use scaling::run_scaling_study;
pub use validate::{CheckResult, ValidationSummary, run_validation_suite};
