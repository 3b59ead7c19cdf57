//! Hierarchical pseudo-lift: per-cluster stars around R-net centers, chained
//! to a single root; same diameter-order mixing with far fewer long paths.

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, SparseMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::{check_r_net, diameter, RNet};

use super::{pad_path, Construction, LiftBuilder, LiftKind, LiftedChain, PathRole};

/// Parameters of a hierarchical pseudo-lift.
#[derive(Debug, Clone)]
pub struct HierLiftParams {
    pub root: usize,
    pub net: RNet,
    /// Mixing weight solving `1/2 = delta2 (1 - 1/(2(R+D)))`.
    pub delta2: f64,
    pub diameter: usize,
}

impl HierLiftParams {
    pub fn new(g: &Graph, root: usize, net: RNet) -> HierLiftParams {
        let d = diameter(g).value.max(1);
        let rd = (net.radius + d) as f64;
        HierLiftParams {
            root,
            net,
            delta2: 0.5 / (1.0 - 1.0 / (2.0 * rd)),
            diameter: d,
        }
    }
}

/// Serializable summary of the parameters (the net itself is large).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierLiftSummary {
    pub root: usize,
    pub radius: usize,
    pub centers: Vec<usize>,
    pub delta2: f64,
}

/// Build the hierarchical pseudo-lift of `c` from an R-net.
///
/// Per center `y`: copies `y1'` and `y2'`, and length-`D` path copies
/// `y1' -> v'` and `v' -> y2'` carrying flow `delta2/(2(R+D)) pi(C_y)` per
/// edge. Per node `w` in cluster `C_y`: length-`R` path copies `w -> y1'`
/// and `y2' -> w` carrying `delta2/(2(R+D)) pi_w` per edge. Original flow is
/// scaled by `1 - delta2`. The lifted graph gains exactly `2Rn + 2D|Y|`
/// edges.
pub fn hierarchical_pseudo_lift(
    g: &Graph,
    c: &Chain,
    params: &HierLiftParams,
) -> Result<LiftedChain> {
    if c.n() != g.n() {
        return Err(Error::Invalid("chain does not match graph".into()));
    }
    if !c.is_conformant(g) {
        return Err(Error::Invalid("chain is not conformant to the graph".into()));
    }
    check_r_net(g, &params.net)?;
    if params.net.radius < 1 {
        return Err(Error::Invalid("net radius must be at least 1".into()));
    }
    let n = g.n();
    let net = &params.net;
    let radius = net.radius;
    let d = params.diameter;
    let flow_unit = params.delta2 / (2.0 * (radius + d) as f64);

    let mut b = LiftBuilder::new(n);
    let root_copy = b.fresh(params.root);

    let q = c.ergodic_flow();
    let keep = 1.0 - params.delta2;
    for (i, j, v) in q.iter() {
        if keep != 0.0 {
            b.triplets.push((i, j, keep * v));
        }
    }

    for (ci, &y) in net.centers.iter().enumerate() {
        let y1 = b.fresh(y);
        let y2 = b.fresh(y);
        let cluster = &net.clusters[ci];
        let cluster_mass: f64 = cluster.iter().map(|&w| c.pi()[w]).sum();

        // center <-> root paths of length exactly D
        let to_root = pad_path(g.shortest_path(y, params.root), d);
        let from_root: Vec<usize> = to_root.iter().rev().copied().collect();
        b.add_path(
            PathRole::CenterToRoot { y },
            y1,
            root_copy,
            &to_root,
            flow_unit * cluster_mass,
        );
        b.add_path(
            PathRole::RootToCenter { y },
            root_copy,
            y2,
            &from_root,
            flow_unit * cluster_mass,
        );

        // node <-> center paths of length exactly R
        for &w in cluster {
            let to_center = pad_path(g.shortest_path(w, y), radius);
            let from_center: Vec<usize> = to_center.iter().rev().copied().collect();
            let flow = flow_unit * c.pi()[w];
            b.add_path(PathRole::NodeToCenter { w, y }, w, y1, &to_center, flow);
            b.add_path(PathRole::CenterToNode { w, y }, y2, w, &from_center, flow);
        }
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
        construction: Construction::Hierarchical,
        paths: b.paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TOL_EXACT;
    use crate::lifting::validate_lift;
    use crate::metrics::greedy_r_net;
    use crate::testutil::uniform;

    fn lift(g: &Graph, radius: usize) -> LiftedChain {
        let c = Chain::metropolis_hastings(g, &uniform(g.n())).unwrap();
        let net = greedy_r_net(g, radius);
        let params = HierLiftParams::new(g, 0, net);
        hierarchical_pseudo_lift(g, &c, &params).unwrap()
    }

    #[test]
    fn exact_edge_count() {
        let g = Graph::grid(2, 8).unwrap();
        let radius = 3;
        let lc = lift(&g, radius);
        let y = lc
            .paths
            .iter()
            .filter(|p| matches!(p.role, PathRole::CenterToRoot { .. }))
            .count();
        let d = diameter(&g).value;
        let expect = g.m() + 2 * radius * g.n() + 2 * d * y;
        assert_eq!(lc.lifted_edge_count(), expect);
    }

    #[test]
    fn pseudo_lift_conditions_hold() {
        for (g, r) in [
            (Graph::ring(16).unwrap(), 2),
            (Graph::grid(2, 5).unwrap(), 2),
            (Graph::barbell(12).unwrap(), 1),
        ] {
            let lc = lift(&g, r);
            let rep = validate_lift(&lc);
            assert!(rep.conformance_violations.is_empty());
            assert!(rep.half_mass_residual.unwrap() <= 1e-10, "{rep:?}");
            assert!(rep.passes, "{rep:?}");
        }
    }

    #[test]
    fn delta2_solves_its_equation() {
        let g = Graph::ring(12).unwrap();
        let net = greedy_r_net(&g, 2);
        let params = HierLiftParams::new(&g, 0, net);
        let rd = (params.net.radius + params.diameter) as f64;
        assert!((params.delta2 * (1.0 - 1.0 / (2.0 * rd)) - 0.5).abs() < TOL_EXACT);
    }

    #[test]
    fn root_copy_mass_matches_closed_form() {
        let g = Graph::ring(16).unwrap();
        let lc = lift(&g, 2);
        let params = {
            let net = greedy_r_net(&g, 2);
            HierLiftParams::new(&g, 0, net)
        };
        let rd = (params.net.radius + params.diameter) as f64;
        let expect = params.delta2 / (2.0 * rd);
        let root_copy = g.n();
        assert!((lc.chain.pi()[root_copy] - expect).abs() < TOL_EXACT);
    }
}
