//! Std companion to `echo-core`: persistence, providers, the HTTP service and
//! the `echo` command line.

pub mod ablate;
pub mod clock;
pub mod config;
pub mod imaging;
pub mod provider;
pub mod script;
pub mod service;
pub mod store;
