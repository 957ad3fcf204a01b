//! File formats and commands around `lsr-core`: panel CSV ingest and emit,
//! run configs, simulation designs, chain storage and posterior summaries.

pub mod chain_io;
pub mod commands;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod kv;
pub mod panel_io;
pub mod summary;

pub use error::{Error, Result};
