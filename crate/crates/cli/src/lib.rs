//! Verification harness: suite runners, configurations, and reports for the
//! state-space geometry library. The `qgeo` binary is a thin wrapper over
//! this crate so integration tests can drive the same code paths.

pub mod config;
pub mod evolve_cmd;
pub mod report;
pub mod report_cmd;
pub mod suites;

pub use config::{EvolveConfig, ReportConfig, SuiteConfig, SuiteName};
pub use report::{CheckRecord, RunReport};
pub use suites::run_verify;
