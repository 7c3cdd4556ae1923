//! HTTP service, model-protocol server and command-line tools.

pub mod api;
pub mod cli;
pub mod config;
pub mod model_server;
