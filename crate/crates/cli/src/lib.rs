//! Command-line front end: resolves run configurations, drives the
//! generation pipelines and reads and writes CSV histories.

pub mod config;
pub mod csvio;
pub mod run;

pub use config::{Method, Overrides, RunConfig};
pub use run::{generate, presets, verify, RunError, Summary};
