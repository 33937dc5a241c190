//! Experiment driver for `bdh-core`: configuration, parallel evaluation
//! over moduli, report formats and the commands behind the `bdh` binary.

pub mod commands;
pub mod config;
pub mod driver;
pub mod error;
pub mod report;

pub use error::{LabError, Result};
