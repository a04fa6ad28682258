//! Files, configuration, cross-validation and the `treerules` command
//! line on top of [`treerules_core`].

pub mod budget;
pub mod candidates;
pub mod cli;
pub mod config;
pub mod crossval;
pub mod error;
pub mod interchange;
pub mod io;
pub mod manifest;
pub mod report;
pub mod train;

pub use error::{ConfigIssue, Error, Result};
pub use treerules_core;
