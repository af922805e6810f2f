//! Configuration, file formats, and the command implementations behind the
//! `cbalign` binary.

pub mod commands;
pub mod config;
pub mod grid;
pub mod heatmap;

pub use commands::{build_map, cmd_ingest_check, cmd_run, cmd_synth, RunSummary, SynthSummary};
pub use config::{RawConfig, RunConfig};
pub use grid::ingest_grid;

use crate::error::Error;

/// Process exit code for an error: 1 for bad input, 2 for runtime failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Load { .. } | Error::Ingest { .. } => 1,
        Error::Io { .. } | Error::Trial { .. } => 2,
    }
}
