//! Command-line front end and the chart-parsing session server.

pub mod commands;
pub mod server;
pub mod session;
