//! File formats, checkpoints, training runs and the command-line interface
//! for the compresso sentence compressor.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod fsutil;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
