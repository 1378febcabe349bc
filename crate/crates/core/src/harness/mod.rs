//! Monte Carlo orchestration: sharded simulation kernels, tallies with
//! confidence intervals, experiment runners and table output.

pub mod experiments;
pub mod output;
pub mod sim;
pub mod tally;

pub use experiments::run;
pub use output::{write_outputs, Table};
pub use tally::{estimate_rate, ErrorKind, RateEstimate, TrialTally};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Runs the configured experiment on `cfg.workers` threads and writes the
/// table and its metadata. Output bytes do not depend on the worker count.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(Table, std::path::PathBuf)> {
    let table = sim::with_pool(cfg.workers, || run(cfg))?;
    let path = write_outputs(cfg, &table)?;
    Ok((table, path))
}
