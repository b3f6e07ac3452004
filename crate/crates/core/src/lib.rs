//! Exact finite models of signed measures on the Cantor space and the
//! constructions that produce weak*-null sequences of them.

pub mod cantor;
pub mod cli;
pub mod error;
pub mod ideal;
pub mod jn;
pub mod measures;
pub mod rational;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Rational;

/// Seed used for every random choice unless a run overrides it.
pub const DEFAULT_SEED: u64 = 20_240_917;
