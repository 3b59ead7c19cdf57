//! Expander chains and balanced multi-commodity flow decompositions.

mod expander;
mod lp;
mod solve;

pub use expander::{build_expander, ExpanderSpec, ExpansionCertificate};
pub use solve::{prune_to_extreme, solve_balanced_flow, solve_with_doubling, FlowOutcome};

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, TOL_SOLVE};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// One weighted directed path of a flow decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowPath {
    /// Directed node sequence in the base graph; consecutive nodes adjacent.
    pub nodes: Vec<usize>,
    pub weight: f64,
}

impl FlowPath {
    pub fn source(&self) -> usize {
        *self.nodes.first().unwrap()
    }

    pub fn sink(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    /// Edge count.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }
}

/// A balanced multi-commodity flow as a weighted path collection, with the
/// congestion/length budget `W` it was solved under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDecomposition {
    pub w: usize,
    pub paths: Vec<FlowPath>,
    /// Demands per directed commodity (s, t).
    pub demands: Vec<(usize, usize, f64)>,
}

impl FlowDecomposition {
    /// Load per directed edge of the base graph.
    pub fn edge_loads(&self) -> std::collections::HashMap<(usize, usize), f64> {
        let mut loads = std::collections::HashMap::new();
        for p in &self.paths {
            for e in p.edges() {
                *loads.entry(e).or_insert(0.0) += p.weight;
            }
        }
        loads
    }

    /// Support size: paths with positive weight.
    pub fn support(&self) -> usize {
        self.paths.iter().filter(|p| p.weight > 0.0).count()
    }

    /// Re-check every decomposition invariant from the raw path list:
    /// path validity in `g`, length bound, per-commodity demand totals,
    /// per-node start/end totals against the demand marginals, and the
    /// congestion constraint against `W * Q` of `chain`.
    pub fn validate(&self, g: &Graph, chain: &Chain) -> Result<()> {
        let total: f64 = self.paths.iter().map(|p| p.weight).sum();
        let demand_total: f64 = self.demands.iter().map(|d| d.2).sum();
        if (total - demand_total).abs() > TOL_SOLVE {
            return Err(Error::Invalid(format!(
                "path weights total {total:.12}, demands total {demand_total:.12}"
            )));
        }
        for p in &self.paths {
            if p.weight <= 0.0 {
                return Err(Error::Invalid("non-positive path weight".into()));
            }
            if p.len() > self.w {
                return Err(Error::Invalid(format!(
                    "path length {} exceeds W = {}",
                    p.len(),
                    self.w
                )));
            }
            for (u, v) in p.edges() {
                if u != v && !g.has_edge(u, v) {
                    return Err(Error::Invalid(format!("path uses non-edge ({u}, {v})")));
                }
            }
        }
        // per-commodity totals
        let mut by_commodity: std::collections::HashMap<(usize, usize), f64> =
            std::collections::HashMap::new();
        for p in &self.paths {
            *by_commodity.entry((p.source(), p.sink())).or_insert(0.0) += p.weight;
        }
        for &(s, t, g_st) in &self.demands {
            let got = by_commodity.remove(&(s, t)).unwrap_or(0.0);
            if (got - g_st).abs() > TOL_SOLVE {
                return Err(Error::Invalid(format!(
                    "commodity ({s}, {t}): routed {got:.12}, demand {g_st:.12}"
                )));
            }
        }
        if let Some(((s, t), w)) = by_commodity.into_iter().next() {
            return Err(Error::Invalid(format!(
                "paths route {w:.12} for undeclared commodity ({s}, {t})"
            )));
        }
        // start/end marginals implied by the demands
        let n = g.n();
        let mut out_demand = vec![0.0f64; n];
        let mut in_demand = vec![0.0f64; n];
        for &(s, t, g_st) in &self.demands {
            out_demand[s] += g_st;
            in_demand[t] += g_st;
        }
        let mut out_got = vec![0.0f64; n];
        let mut in_got = vec![0.0f64; n];
        for p in &self.paths {
            out_got[p.source()] += p.weight;
            in_got[p.sink()] += p.weight;
        }
        for i in 0..n {
            if (out_got[i] - out_demand[i]).abs() > TOL_SOLVE
                || (in_got[i] - in_demand[i]).abs() > TOL_SOLVE
            {
                return Err(Error::Invalid(format!("start/end totals mismatch at node {i}")));
            }
        }
        // congestion against W Q
        let q = chain.ergodic_flow();
        let w = self.w as f64;
        for (&(u, v), &load) in &self.edge_loads() {
            let cap = w * q.get(u, v);
            if load > cap + TOL_SOLVE {
                return Err(Error::CongestionExceeded { u, v, load, cap });
            }
        }
        Ok(())
    }
}
