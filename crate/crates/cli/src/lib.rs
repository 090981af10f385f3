//! Configuration, orchestration and reporting for the `loopq` verification suite.

pub mod config;
pub mod error;
pub mod persist;
pub mod report;
pub mod suite;

pub use config::{RunConfig, SuiteSelection};
pub use error::CliError;
pub use report::{emit_report, Format};
pub use suite::{run_suite, Report};
