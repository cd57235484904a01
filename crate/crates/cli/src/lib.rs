//! Run orchestration for the `gqbm` command: configuration, the pipelines
//! behind each subcommand, and CSV/manifest output.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

use std::time::Instant;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use output::Summary;
pub use pipeline::Pipeline;

/// Run `pipeline` and write its tables plus `manifest.toml` into the
/// configured output directory.
pub fn run(pipeline: Pipeline, config: &RunConfig) -> Result<Summary, CliError> {
    let start = Instant::now();
    let summary = pipeline::execute(pipeline, config)?;
    let elapsed = start.elapsed().as_secs_f64();
    output::write_manifest(&config.output.dir, pipeline.name(), config, &summary, elapsed)?;
    Ok(summary)
}
