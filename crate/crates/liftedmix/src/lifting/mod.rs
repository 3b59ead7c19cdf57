//! Lifting and pseudo-lifting constructions with validity checking.
//!
//! Lifted state spaces follow one indexing convention throughout: states
//! `0..n` are the copies of the original nodes (the set `V(G)`, which is the
//! marked set `T` of a pseudo-lifting), and every added copy comes after.

mod expander;
mod hierarchical;
mod induced;
mod star;
mod stopping;

pub use expander::expander_lift;
pub use hierarchical::{hierarchical_pseudo_lift, HierLiftParams};
pub use induced::induced_chain;
pub use star::{star_pseudo_lift, StarLiftParams};
pub use stopping::{simulate_star_stopping_rule, StoppingRuleReport};

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, ChainJson, SparseMatrix, TOL_EXACT, TOL_SOLVE};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftKind {
    Lifting,
    PseudoLifting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    Identity,
    Star,
    Hierarchical,
    Expander,
}

/// Role of an added path, for the stopping rule and test introspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathRole {
    /// `P'_wv`: from original node `w` to the root copy.
    ToRoot { w: usize },
    /// `P'_vw`: from the root copy to original node `w`.
    FromRoot { w: usize },
    /// `P'_wy`: from original node `w` to the first copy of its center.
    NodeToCenter { w: usize, y: usize },
    /// `P'_yv`: from a center's first copy to the root copy.
    CenterToRoot { y: usize },
    /// `P'_vy`: from the root copy to a center's second copy.
    RootToCenter { y: usize },
    /// `P'_yw`: from a center's second copy to original node `w`.
    CenterToNode { w: usize, y: usize },
    /// A flow path copy between two original nodes.
    Flow { s: usize, t: usize },
}

/// One added directed path: its lifted states (endpoints included), the
/// original node under each state, and its role.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathCopy {
    pub role: PathRole,
    /// Lifted state ids along the path; `states[0]` is the source.
    pub states: Vec<usize>,
    /// `f` restricted to the path (same length as `states`).
    pub originals: Vec<usize>,
}

impl PathCopy {
    pub fn source(&self) -> usize {
        self.states[0]
    }

    pub fn sink(&self) -> usize {
        *self.states.last().unwrap()
    }

    /// Interior states (everything but the two endpoints).
    pub fn interiors(&self) -> &[usize] {
        &self.states[1..self.states.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A chain on a lifted state space together with the projection data
/// needed to validate it against the definitions.
#[derive(Debug, Clone)]
pub struct LiftedChain {
    pub chain: Chain,
    /// Projection onto original nodes; identity on `0..n`.
    pub f: Vec<usize>,
    /// Marked set `T` (pseudo-lifting only); always the original copies here.
    pub marked: Option<Vec<usize>>,
    pub origin: Chain,
    pub origin_graph: Graph,
    pub kind: LiftKind,
    pub construction: Construction,
    pub paths: Vec<PathCopy>,
}

impl LiftedChain {
    /// The trivial lift: the chain itself, `f` the identity, nothing added.
    pub fn identity(origin_graph: Graph, chain: Chain) -> LiftedChain {
        let n = chain.n();
        LiftedChain {
            origin: chain.clone(),
            chain,
            f: (0..n).collect(),
            marked: None,
            origin_graph,
            kind: LiftKind::Lifting,
            construction: Construction::Identity,
            paths: Vec::new(),
        }
    }

    pub fn n_original(&self) -> usize {
        self.origin.n()
    }

    pub fn n_lifted(&self) -> usize {
        self.chain.n()
    }

    /// States that are copies of original node `u`.
    pub fn fiber(&self, u: usize) -> Vec<usize> {
        (0..self.n_lifted()).filter(|&s| self.f[s] == u).collect()
    }

    /// Lifted edge count: undirected original-copy edges plus directed added
    /// edges, counted from the transition structure.
    pub fn lifted_edge_count(&self) -> usize {
        let n = self.n_original();
        let mut old_pairs = std::collections::HashSet::new();
        let mut added = 0usize;
        for (i, j, _) in self.chain.p().iter() {
            if i == j {
                continue;
            }
            if i < n && j < n && self.origin_graph.has_edge(i, j) {
                old_pairs.insert((i.min(j), i.max(j)));
            } else {
                added += 1;
            }
        }
        old_pairs.len() + added
    }

    /// Default declared start set for sampled-mode mixing measurement: all
    /// original copies plus the two BFS-farthest lifted states.
    pub fn default_start_set(&self) -> Vec<usize> {
        let n_hat = self.n_lifted();
        let mut starts: Vec<usize> = (0..self.n_original()).collect();
        let d0 = directed_bfs(self.chain.p(), 0);
        let u = argmax_finite(&d0);
        let du = directed_bfs(self.chain.p(), u);
        let z = argmax_finite(&du);
        for extra in [u, z] {
            if extra < n_hat && !starts.contains(&extra) {
                starts.push(extra);
            }
        }
        starts
    }
}

fn directed_bfs(p: &SparseMatrix, src: usize) -> Vec<u32> {
    let n = p.n();
    let mut dist = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let (cols, _) = p.row(u);
        for &w in cols {
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

fn argmax_finite(dist: &[u32]) -> usize {
    let mut arg = 0;
    let mut best = 0;
    for (v, &d) in dist.iter().enumerate() {
        if d != u32::MAX && d > best {
            best = d;
            arg = v;
        }
    }
    arg
}

/// Per-condition validity report for a lifted chain; failures are content,
/// not errors.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    /// Edges `(u_hat, v_hat)` with `f(u_hat) != f(v_hat)` that project onto
    /// non-edges of `G`; must be empty.
    pub conformance_violations: Vec<(usize, usize)>,
    /// `|sum pi_hat - 1|`
    pub mass_residual: f64,
    /// `|sum Q_hat - 1|`
    pub flow_residual: f64,
    /// Pseudo-lifting condition (b): worst `|pi_hat(f^-1(u) n T) - pi(u)/2|`.
    pub half_mass_residual: Option<f64>,
    /// Lifting: worst `|pi(u) - pi_hat(f^-1(u))|`.
    pub pi_projection_residual: Option<f64>,
    /// Lifting: worst `|Q(u,v) - Q_hat(f^-1(u), f^-1(v))|`.
    pub q_projection_residual: Option<f64>,
    pub passes: bool,
}

/// Check every invariant of the lifted chain against its definition
/// (conformance always; the half-mass condition for pseudo-liftings; both
/// projection equalities for liftings).
pub fn validate_lift(lc: &LiftedChain) -> ValidityReport {
    let n = lc.n_original();
    let q_hat = lc.chain.ergodic_flow();
    let pi_hat = lc.chain.pi();

    let mut conformance_violations = Vec::new();
    for (i, j, _) in lc.chain.p().iter() {
        let (fu, fv) = (lc.f[i], lc.f[j]);
        if fu != fv && !lc.origin_graph.has_edge(fu, fv) {
            conformance_violations.push((i, j));
        }
    }

    let mass_residual = (pi_hat.iter().sum::<f64>() - 1.0).abs();
    let flow_residual = (q_hat.iter().map(|(_, _, v)| v).sum::<f64>() - 1.0).abs();

    let mut half_mass_residual = None;
    let mut pi_projection_residual = None;
    let mut q_projection_residual = None;

    match lc.kind {
        LiftKind::PseudoLifting => {
            let marked = lc.marked.as_ref().expect("pseudo-lifting carries T");
            let mut marked_mass = vec![0.0f64; n];
            for &s in marked {
                marked_mass[lc.f[s]] += pi_hat[s];
            }
            let worst = (0..n)
                .map(|u| (marked_mass[u] - 0.5 * lc.origin.pi()[u]).abs())
                .fold(0.0f64, f64::max);
            half_mass_residual = Some(worst);
        }
        LiftKind::Lifting => {
            let mut fiber_mass = vec![0.0f64; n];
            for (s, &m) in pi_hat.iter().enumerate() {
                fiber_mass[lc.f[s]] += m;
            }
            let worst_pi = (0..n)
                .map(|u| (fiber_mass[u] - lc.origin.pi()[u]).abs())
                .fold(0.0f64, f64::max);
            pi_projection_residual = Some(worst_pi);

            // project Q_hat through f and compare entrywise with Q
            let mut projected: std::collections::HashMap<(usize, usize), f64> =
                std::collections::HashMap::new();
            for (i, j, v) in q_hat.iter() {
                *projected.entry((lc.f[i], lc.f[j])).or_insert(0.0) += v;
            }
            let q = lc.origin.ergodic_flow();
            let mut worst_q = 0.0f64;
            for (u, v, qv) in q.iter() {
                let got = projected.remove(&(u, v)).unwrap_or(0.0);
                worst_q = worst_q.max((got - qv).abs());
            }
            for (_, got) in projected {
                worst_q = worst_q.max(got.abs());
            }
            q_projection_residual = Some(worst_q);
        }
    }

    let passes = conformance_violations.is_empty()
        && mass_residual <= TOL_EXACT
        && flow_residual <= TOL_EXACT
        && half_mass_residual.is_none_or(|r| r <= TOL_SOLVE)
        && pi_projection_residual.is_none_or(|r| r <= TOL_SOLVE)
        && q_projection_residual.is_none_or(|r| r <= TOL_SOLVE);

    ValidityReport {
        conformance_violations,
        mass_residual,
        flow_residual,
        half_mass_residual,
        pi_projection_residual,
        q_projection_residual,
        passes,
    }
}

/// Pad a node sequence to exactly `len` edges by repeating the final node.
pub(crate) fn pad_path(mut nodes: Vec<usize>, len: usize) -> Vec<usize> {
    debug_assert!(!nodes.is_empty() && nodes.len() <= len + 1);
    let last = *nodes.last().unwrap();
    while nodes.len() < len + 1 {
        nodes.push(last);
    }
    nodes
}

// --- serialization -------------------------------------------------------

/// JSON form of a lifted chain: the chain payload plus projection metadata.
#[derive(Debug, Serialize, Deserialize)]
pub struct LiftedChainJson {
    pub chain: ChainJson,
    pub f: Vec<usize>,
    pub t: Option<Vec<usize>>,
    pub kind: LiftKind,
    pub construction: Construction,
    pub path_registry: Vec<PathCopy>,
    pub origin: ChainJson,
    pub origin_edges: Vec<(usize, usize)>,
}

impl LiftedChain {
    pub fn to_json(&self) -> LiftedChainJson {
        LiftedChainJson {
            chain: self.chain.to_json(),
            f: self.f.clone(),
            t: self.marked.clone(),
            kind: self.kind,
            construction: self.construction,
            path_registry: self.paths.clone(),
            origin: self.origin.to_json(),
            origin_edges: self.origin_graph.edges().to_vec(),
        }
    }

    pub fn from_json(json: &LiftedChainJson) -> Result<LiftedChain> {
        let chain = Chain::from_json(&json.chain)?;
        let origin = Chain::from_json(&json.origin)?;
        let origin_graph = Graph::from_edge_list(origin.n(), &json.origin_edges)?;
        if json.f.len() != chain.n() {
            return Err(Error::Invalid("f length mismatch".into()));
        }
        Ok(LiftedChain {
            chain,
            f: json.f.clone(),
            marked: json.t.clone(),
            origin,
            origin_graph,
            kind: json.kind,
            construction: json.construction,
            paths: json.path_registry.clone(),
        })
    }
}

/// Ergodic-flow builder shared by the constructions: accumulates triplets,
/// allocates fresh copies, and records the path registry.
pub(crate) struct LiftBuilder {
    pub triplets: Vec<(usize, usize, f64)>,
    pub f: Vec<usize>,
    pub paths: Vec<PathCopy>,
}

impl LiftBuilder {
    pub fn new(n_original: usize) -> LiftBuilder {
        LiftBuilder {
            triplets: Vec::new(),
            f: (0..n_original).collect(),
            paths: Vec::new(),
        }
    }

    /// Allocate a fresh copy of original node `u`.
    pub fn fresh(&mut self, u: usize) -> usize {
        let id = self.f.len();
        self.f.push(u);
        id
    }

    /// Add a directed path copy between two existing lifted states with fresh
    /// interiors copied from `originals[1..len]` and a uniform edge flow.
    pub fn add_path(
        &mut self,
        role: PathRole,
        source_state: usize,
        sink_state: usize,
        originals: &[usize],
        edge_flow: f64,
    ) {
        let len = originals.len() - 1;
        let mut states = Vec::with_capacity(len + 1);
        states.push(source_state);
        for &orig in &originals[1..len] {
            states.push(self.fresh(orig));
        }
        states.push(sink_state);
        for w in states.windows(2) {
            self.triplets.push((w[0], w[1], edge_flow));
        }
        self.paths.push(PathCopy {
            role,
            states,
            originals: originals.to_vec(),
        });
    }

    pub fn n_states(&self) -> usize {
        self.f.len()
    }
}
