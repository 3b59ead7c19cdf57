//! Lifted and pseudo-lifted Markov chains on graphs.
//!
//! Builds row-stochastic chains (Metropolis-Hastings and derived), the star,
//! hierarchical, and expander lifting constructions, balanced multi-commodity
//! flow decompositions, and the linear averaging iteration, together with the
//! measurement machinery (conductance, spectra, mixing times, cost accounting)
//! needed to compare them at desk scale.

pub mod averaging;
pub mod chain;
pub mod conductance;
pub mod error;
pub mod experiment;
pub mod flows;
pub mod graph;
pub mod lifting;
pub mod metrics;
pub mod mixing;
pub mod spectral;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec};
