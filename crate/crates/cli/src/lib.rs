//! Config-driven runner: `cp-check`, `evolve`, `optics` and `interferometer`
//! scenarios with CSV or JSON output.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{load_config, run, Overrides, RunError, RunOutcome};
