//! Command-line front end: configuration, commands and the acceptance suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;
