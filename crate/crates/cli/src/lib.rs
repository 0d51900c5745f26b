//! Command-line front end and HTTP API for the stable-rank library.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod pipeline;
pub mod server;
