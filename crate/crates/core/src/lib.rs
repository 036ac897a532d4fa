//! Cost-sensitive model selection over feature-set lattices.

pub mod baselines;
pub mod costpoly;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod lattice;
pub mod learner;
pub mod polydom;

pub use error::{Error, Result};
