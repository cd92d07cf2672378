//! Command-line front end: validation, solving, pipeline normalization and the
//! acceptance suites.

pub mod commands;
pub mod report;
pub mod suites;

pub use commands::{mso_check_equiv, mso_normalize, solve, validate, Solved};
pub use report::{Check, CommandOutput, Exit, RunReport};
pub use suites::{run as run_criterion, CriterionResult, CRITERIA};
