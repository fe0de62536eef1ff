//! File formats, configuration, and run orchestration for the `cogload`
//! binary. Exposed as a library so integration tests exercise the same
//! readers and writers the CLI uses.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod manifest;
pub mod parallel;
