//! Completion-time analysis of redundant batch-to-worker assignments in a
//! master/worker system with exponential service times.
//!
//! * [`model`]: system parameters, assignment vectors, layouts, recovery structures.
//! * [`analytics`]: exact coverage probabilities and expected completion times.
//! * [`policies`]: balanced, random, cyclic and grouped assignment constructors.
//! * [`sim`]: reproducible Monte Carlo estimates.
//! * [`cli`]: the commands behind the `straggler` binary.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod model;
pub mod policies;
pub mod sim;

pub use error::{Error, Result};
