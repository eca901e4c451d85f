//! Batch driver: run configurations, preset scenarios, ensemble execution,
//! and result files for the trajectory solver in `qlbe-core`.

pub mod config;
pub mod initial_state;
pub mod presets;
pub mod runner;

pub use config::{ConfigError, RunConfig};
pub use runner::{run, run_to_files, ObsResult, RunOutput};
