//! Configuration, experiment drivers and output formats for the `cens` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, print_schema, ConfigError, Experiment, OutputFormat, RunConfig};
pub use run::{load_config, run, Overrides, RunError, RunOutput};
