//! Scenario-driven front end for `hessflow-core`: JSON configuration,
//! built-in presets, trajectory and report files.
//!
//! Exit statuses: 0 pass, 1 diagnostic failure, 2 configuration or file
//! error, 3 numerical blow-up.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
pub mod scenario;
pub mod suites;

pub use commands::{check, scan, simulate, Source};
pub use error::{CliError, Status};
