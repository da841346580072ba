//! Library surface of the command-line front end, split out so integration
//! tests and fuzz targets can drive the configuration parser and the
//! command implementations directly.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
