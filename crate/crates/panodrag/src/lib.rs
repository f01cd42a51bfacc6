//! Case files, synthetic cases and the end-to-end editing suite built on
//! [`panodrag_core`].
//!
//! - [`manifest`] / [`io`]: the on-disk case format and PNG helpers.
//! - [`synth`]: seeded synthetic panoramas with blob drags.
//! - [`suite`]: align → drag → inverse-align → metrics over a case list.
//! - [`report`]: JSON report and trace writers.

pub mod io;
pub mod manifest;
pub mod report;
pub mod suite;
pub mod synth;

/// Toolkit version echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
