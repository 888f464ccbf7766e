//! Batch front end for `fecx-core`: configuration, parallel orchestration
//! and file output.

pub mod config;
pub mod modes;
pub mod output;
pub mod records;

pub use config::{BlockingChoice, ConfigError, Endpoint, Mode, RunConfig};
pub use modes::{run, RunOutcome};
