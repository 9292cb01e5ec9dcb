//! Operator entry points: the `rfscope` command line and the HTTP service
//! behind the web console.

pub mod cli;
pub mod config;
pub mod live;
pub mod service;
