//! Batch pipeline over concentrated-liquidity pools: reconstruct hourly
//! states, compute TVL, concentration and liquidity-cost metrics, run the
//! difference-in-differences event study and render CSV/SVG reports.

pub mod config;
pub mod fixture;
pub mod output;
pub mod pipeline;
pub mod svg;

use std::path::Path;

pub use config::{Overrides, RunConfig};
pub use output::Manifest;
pub use pipeline::{fetch, run_pipeline, run_stage, Stage};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or input data.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
