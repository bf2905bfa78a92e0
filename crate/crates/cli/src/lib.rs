//! Command-line surface for hotelnav: scenario simulation, recorded-experiment
//! replay, planner benchmarking and map rendering.

pub mod bench;
pub mod error;
pub mod metrics;
pub mod plan;
pub mod render;
pub mod replay;
pub mod scenario;
pub mod simulate;

pub use error::{CliError, CliResult};
