//! Implementation library for the `gapwb` binary: command bodies, spec
//! parsers, shipped fixtures, and report/manifest plumbing. It lives in a
//! library so that integration tests drive exactly the code paths the
//! binary does.

pub mod commands;
pub mod errors;
pub mod fixtures;
pub mod manifest;
pub mod spec;

/// Crate version, baked into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
