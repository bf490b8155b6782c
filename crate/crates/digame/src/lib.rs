//! File formats, configuration, parallel harnesses and the command line
//! built on `digame-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod manifest;
pub mod parallel;
