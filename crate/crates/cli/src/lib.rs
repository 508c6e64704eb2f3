//! Batch experiment runner: configuration, subcommands, reports and the
//! acceptance suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod suite;
