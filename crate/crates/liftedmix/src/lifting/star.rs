//! Star pseudo-lift: a virtual star topology of directed paths through one
//! root copy, mixing in time proportional to the diameter.

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, SparseMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::diameter;

use super::{pad_path, Construction, LiftBuilder, LiftKind, LiftedChain, PathRole};

/// Parameters of a star pseudo-lift.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StarLiftParams {
    pub root: usize,
    /// Mixing weight solving `1/2 = delta1 (1 - 1/(2D))`.
    pub delta1: f64,
    pub diameter: usize,
}

impl StarLiftParams {
    pub fn for_graph(g: &Graph, root: usize) -> StarLiftParams {
        let d = diameter(g).value.max(1);
        StarLiftParams {
            root,
            delta1: 0.5 / (1.0 - 1.0 / (2.0 * d as f64)),
            diameter: d,
        }
    }
}

/// A root of minimum eccentricity (lowest index on ties).
pub fn central_root(g: &Graph) -> usize {
    let mut best = (usize::MAX, 0usize);
    for v in 0..g.n() {
        let ecc = g.bfs(v).iter().copied().max().unwrap() as usize;
        if ecc < best.0 {
            best = (ecc, v);
        }
    }
    best.1
}

/// Build the star pseudo-lift of `c` rooted at `root`.
///
/// Adds a root copy `v'` and, per original node `w`, directed path copies
/// `w -> v'` and `v' -> w`, each padded to length exactly `D` by repeating
/// the terminal node. Path edges carry flow `delta1/(2D) pi_w`; original
/// flow (self-transitions included) is scaled by `1 - delta1`. The marked
/// set is the original copies, which end up holding half of every node's
/// stationary mass.
pub fn star_pseudo_lift(g: &Graph, c: &Chain, root: usize) -> Result<LiftedChain> {
    if c.n() != g.n() {
        return Err(Error::Invalid("chain does not match graph".into()));
    }
    if root >= g.n() {
        return Err(Error::Invalid(format!("root {root} out of range")));
    }
    if !c.is_conformant(g) {
        return Err(Error::Invalid("chain is not conformant to the graph".into()));
    }
    let n = g.n();
    let params = StarLiftParams::for_graph(g, root);
    let d = params.diameter;
    let path_flow_unit = params.delta1 / (2.0 * d as f64);

    let mut b = LiftBuilder::new(n);
    let root_copy = b.fresh(root);

    // original flow, scaled
    let q = c.ergodic_flow();
    let keep = 1.0 - params.delta1;
    for (i, j, v) in q.iter() {
        if keep != 0.0 {
            b.triplets.push((i, j, keep * v));
        }
    }

    for w in 0..n {
        let to_root = pad_path(g.shortest_path(w, root), d);
        let from_root: Vec<usize> = to_root.iter().rev().copied().collect();
        let flow = path_flow_unit * c.pi()[w];
        b.add_path(PathRole::ToRoot { w }, w, root_copy, &to_root, flow);
        b.add_path(PathRole::FromRoot { w }, root_copy, w, &from_root, flow);
    }

    let n_states = b.n_states();
    let q_hat = SparseMatrix::from_triplets(n_states, &b.triplets);
    let chain = Chain::from_ergodic_flow(&q_hat)?;
    Ok(LiftedChain {
        chain,
        f: b.f,
        marked: Some((0..n).collect()),
        origin: c.clone(),
        origin_graph: g.clone(),
        kind: LiftKind::PseudoLifting,
        construction: Construction::Star,
        paths: b.paths,
    })
}
