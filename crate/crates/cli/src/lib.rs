//! Command-line companion of the squeezing toolkit: configuration ingestion,
//! protocol execution, sweeps, validation campaigns and flat-file outputs.
//!
//! Everything numerical lives in the `mechsqueeze` core crate; this crate
//! only adds IO, orchestration and report formats.

#![warn(missing_docs)]

pub mod commands;
pub mod config;
pub mod manifest;
pub mod validate;
