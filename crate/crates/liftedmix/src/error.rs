//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, chain construction, and measurement.
#[derive(Debug, Error)]
pub enum Error {
    /// Edge-list input does not describe a connected graph; carries one
    /// component that is separated from node 0.
    #[error("graph is disconnected; offending component: {component:?}")]
    Disconnected { component: Vec<usize> },

    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),

    #[error("invalid edge list: {0}")]
    EdgeListParse(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("exact mode supports n <= {limit}, got n = {n}; use {hint}")]
    ExactModeTooLarge {
        n: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("iterative eigensolve did not converge; last residual {residual:.3e}")]
    EigenNoConvergence { residual: f64 },

    #[error("comparison hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("flow congestion exceeds W*Q on edge ({u}, {v}): load {load:.6e} > cap {cap:.6e}")]
    CongestionExceeded { u: usize, v: usize, load: f64, cap: f64 },

    #[error("expander certification failed after {attempts} attempts; best spectral gap {best_gap:.4}")]
    ExpanderCertification { attempts: usize, best_gap: f64 },

    #[error("input vector must be strictly positive: {0}")]
    NonPositiveInput(String),

    #[error("step cap {cap} exceeded; best relative error achieved {best_error:.3e}")]
    StepCapExceeded { cap: u64, best_error: f64 },

    #[error("original nodes unreachable from lifted state {state}")]
    OriginalUnreachable { state: usize },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
