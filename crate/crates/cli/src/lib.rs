//! Command-line front end: run manifests, presets and output writers.

pub mod error;
pub mod manifest;
pub mod output;
pub mod run;

pub use error::CliError;
pub use manifest::{preset_fig1, preset_fig2, OutputFormat, Overrides, Preset, RunManifest};
pub use run::{execute, simulate};
