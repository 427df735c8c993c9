//! Test support for the threatfair crates.
//!
//! Nothing in here depends on `threatfair-core`. Models are produced and
//! consumed as raw JSON documents in the on-disk schema, so the oracles
//! below share no code path with the engine they check.

pub mod generate;
pub mod oracle;

pub use generate::{random_model, seeded_rng, GenConfig, ModeChoice};
pub use oracle::Oracle;
