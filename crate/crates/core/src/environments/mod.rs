//! Seeded synthetic environments with declared loss bounds.

pub mod bco;
pub mod contextual;
pub mod mab;

pub use bco::BcoOracle;
pub use contextual::{ContextRound, ContextualEnvironment};
pub use mab::MabEnvironment;
