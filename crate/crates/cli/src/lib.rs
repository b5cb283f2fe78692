//! File formats, run configuration, checkpoints and the command
//! implementations behind the `adaptive-hash` binary.

pub mod checkpoint;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod executor;
pub mod mesh_io;
pub mod metrics;
pub mod ppm;
pub mod run_config;

pub use error::{CliError, Result};
pub use executor::Threads;
pub use run_config::RunConfig;
