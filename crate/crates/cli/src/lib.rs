//! Scenario-driven front end for `histlab`: JSON scenarios in, JSON reports out.

pub mod error;
pub mod report;
pub mod reproduce;
pub mod run;
pub mod scenario;

pub use error::CliError;
pub use report::Report;
pub use run::run_scenario;
pub use scenario::{parse_scenario, Analysis, Prepared, Scenario};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// An expectation or analysis failed.
    pub const FAILED: i32 = 1;
    /// The input could not be read or validated.
    pub const INPUT: i32 = 2;
}
