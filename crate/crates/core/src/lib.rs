//! Active clustering of `M` items from noisy pairwise same-cluster queries.
//!
//! The crate computes the instance-dependent lower bound on the number of
//! queries, tracks the optimal query allocation with forced exploration, and
//! stops with a `delta`-correct generalized likelihood ratio test.

pub mod allocation;
pub mod divergence;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod sampling;
pub mod stopping;

pub use error::{Error, Result};
