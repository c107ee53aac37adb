//! Scenario runner for `flowroot`: declarative configs, built-in
//! experiments, JSON run reports and CSV exports.

pub mod config;
pub mod export;
pub mod runner;
pub mod scenarios;

/// JSON schema every run report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");
