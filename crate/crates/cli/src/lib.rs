//! Config parsing, presets, experiment runners and report writing for the `amalfree` binary.

pub mod config;
pub mod error;
pub mod presets;
pub mod report;
pub mod runner;
