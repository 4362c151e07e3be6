//! Abstract algebraic logic toolkit: terms, Hilbert calculi, finite matrices,
//! commutative-ring reasoning and the reductions built on them.

pub mod cli;
pub mod cring;
pub mod error;
pub mod finalg;
pub mod gallery;
pub mod hilbert;
pub mod reductions;
pub mod sample;
pub mod terms;

pub use error::{Error, Result};
