//! File formats and the command-line front end for `bargmann-core`.

pub mod args;
pub mod commands;
pub mod error;
pub mod formats;
pub mod output;
