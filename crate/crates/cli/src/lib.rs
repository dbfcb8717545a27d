//! Command implementations behind the `efbv` binary: tuning reports,
//! experiment runs, Monte Carlo certification, and the built-in parameter
//! table.

pub mod commands;
pub mod config;
pub mod report;
