//! Scenario runner behind the `semiq` binary.

pub mod config;
pub mod report;

pub use config::{parse_config, ConfigError, RawConfig, ScenarioConfig, SCHEMA_VERSION};
pub use report::{run_scenario, RunReport};
