//! Metric structure of graphs: diameter, R-nets, doubling-constant estimates.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// All-pairs exact distances are computed up to this many nodes; above it the
/// diameter falls back to a double-sweep BFS lower bound.
pub const ALL_PAIRS_LIMIT: usize = 4096;

/// Exhaustive doubling-constant search is run up to this many nodes.
pub const DOUBLING_EXACT_LIMIT: usize = 512;

const DOUBLING_SAMPLE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Diameter in hops, with `exact = false` when it is only the double-sweep
/// lower bound (n > [`ALL_PAIRS_LIMIT`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: usize,
    pub exact: bool,
}

/// Doubling-constant estimate: a greedy-cover upper bound on the worst
/// half-radius cover number, exhaustive over all (x, r) when `exact`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub constant: usize,
    pub exact: bool,
}

impl DoublingEstimate {
    /// Doubling dimension log2 of the constant (fractional).
    pub fn dimension(&self) -> f64 {
        (self.constant as f64).log2()
    }
}

/// Summary metrics emitted as one JSON record per graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub n: usize,
    pub m: usize,
    pub diameter: usize,
    pub doubling_constant: usize,
    pub exact: bool,
}

/// An R-net: centers pairwise more than `R` apart, every node within `R` of
/// its assigned center. Tie-breaking is lowest center index throughout.
#[derive(Debug, Clone)]
pub struct RNet {
    pub radius: usize,
    pub centers: Vec<usize>,
    /// node -> assigned center
    pub assignment: Vec<usize>,
    /// per center, the sorted cluster it owns (parallel to `centers`)
    pub clusters: Vec<Vec<usize>>,
}

impl RNet {
    /// Cluster of the given center node.
    pub fn cluster_of(&self, center: usize) -> &[usize] {
        let idx = self.centers.iter().position(|&c| c == center).unwrap();
        &self.clusters[idx]
    }
}

/// Exact diameter for n <= [`ALL_PAIRS_LIMIT`]; double-sweep lower bound above.
pub fn diameter(g: &Graph) -> Diameter {
    if g.n() <= ALL_PAIRS_LIMIT {
        let mut best = 0;
        for v in 0..g.n() {
            let d = g.bfs(v);
            let ecc = d.iter().copied().max().unwrap();
            best = best.max(ecc as usize);
        }
        Diameter { value: best, exact: true }
    } else {
        let d0 = g.bfs(0);
        let (u, _) = farthest(&d0);
        let du = g.bfs(u);
        let (_, ecc) = farthest(&du);
        Diameter { value: ecc as usize, exact: false }
    }
}

fn farthest(dist: &[u32]) -> (usize, u32) {
    let mut arg = 0;
    let mut best = 0;
    for (v, &d) in dist.iter().enumerate() {
        if d != u32::MAX && d > best {
            best = d;
            arg = v;
        }
    }
    (arg, best)
}

/// Greedy R-net: scan nodes in ascending index, keep any node more than `R`
/// from all previously kept centers; assign each node to its nearest center,
/// breaking ties by lowest center index.
pub fn greedy_r_net(g: &Graph, radius: usize) -> RNet {
    let n = g.n();
    // distance to the nearest already-chosen center, and that center
    let mut best_dist = vec![u32::MAX; n];
    let mut best_center = vec![usize::MAX; n];
    let mut centers = Vec::new();
    for v in 0..n {
        if best_dist[v] != u32::MAX && best_dist[v] as usize <= radius {
            continue;
        }
        centers.push(v);
        let d = g.bfs(v);
        for w in 0..n {
            if d[w] < best_dist[w] {
                best_dist[w] = d[w];
                best_center[w] = v;
            }
        }
    }
    let mut clusters = vec![Vec::new(); centers.len()];
    let index_of: std::collections::HashMap<usize, usize> =
        centers.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    for w in 0..n {
        clusters[index_of[&best_center[w]]].push(w);
    }
    RNet {
        radius,
        centers,
        assignment: best_center,
        clusters,
    }
}

/// Upper estimate of the doubling constant: the worst greedy cover of a
/// closed hop-ball `{d(x, .) <= k}` by closed balls of radius `ceil(k/2)`
/// (half the radius, rounded up to a hop count). Exhaustive over all (x, k)
/// for n <= [`DOUBLING_EXACT_LIMIT`]; otherwise `sample_budget` pairs are
/// drawn from a fixed-seed generator so repeated runs agree.
pub fn doubling_constant(g: &Graph, sample_budget: usize) -> DoublingEstimate {
    let n = g.n();
    if n <= DOUBLING_EXACT_LIMIT {
        let dist: Vec<Vec<u32>> = (0..n).map(|v| g.bfs(v)).collect();
        let mut worst = 1usize;
        for x in 0..n {
            let ecc = *dist[x].iter().max().unwrap() as usize;
            for k in 1..=ecc {
                worst = worst.max(greedy_cover_count(&dist, x, k));
            }
        }
        DoublingEstimate { constant: worst, exact: true }
    } else {
        let mut rng = StdRng::seed_from_u64(DOUBLING_SAMPLE_SEED);
        let diam = diameter(g).value.max(1);
        let mut worst = 1usize;
        for _ in 0..sample_budget {
            let x = rng.random_range(0..n);
            let k = rng.random_range(1..=diam);
            let dist_x = g.bfs(x);
            worst = worst.max(greedy_cover_count_sampled(g, &dist_x, x, k));
        }
        DoublingEstimate { constant: worst, exact: false }
    }
}

/// Greedy set cover of `{d(x,.) <= k}` by balls of radius `ceil(k/2)`,
/// lowest-index tie-breaking. Returns the number of balls used.
fn greedy_cover_count(dist: &[Vec<u32>], x: usize, k: usize) -> usize {
    let n = dist.len();
    let half = k.div_ceil(2) as u32;
    let mut uncovered: Vec<usize> = (0..n).filter(|&w| dist[x][w] as usize <= k).collect();
    let mut count = 0;
    while !uncovered.is_empty() {
        let mut best_y = usize::MAX;
        let mut best_gain = 0usize;
        for y in 0..n {
            let gain = uncovered.iter().filter(|&&w| dist[y][w] <= half).count();
            if gain > best_gain {
                best_gain = gain;
                best_y = y;
            }
        }
        debug_assert!(best_gain > 0, "ball center covers itself");
        uncovered.retain(|&w| dist[best_y][w] > half);
        count += 1;
    }
    count
}

fn greedy_cover_count_sampled(g: &Graph, dist_x: &[u32], x: usize, k: usize) -> usize {
    let half = k.div_ceil(2) as u32;
    let universe: Vec<usize> = (0..g.n()).filter(|&w| dist_x[w] as usize <= k).collect();
    // candidate centers within k + half of x can contribute coverage
    let candidates: Vec<usize> = (0..g.n())
        .filter(|&y| dist_x[y] as usize <= k + half as usize)
        .collect();
    let balls: Vec<Vec<u32>> = candidates.iter().map(|&y| g.bfs(y)).collect();
    let mut uncovered = universe;
    let mut count = 0;
    while !uncovered.is_empty() {
        let mut best = usize::MAX;
        let mut best_gain = 0usize;
        for (i, ball) in balls.iter().enumerate() {
            let gain = uncovered.iter().filter(|&&w| ball[w] <= half).count();
            if gain > best_gain {
                best_gain = gain;
                best = i;
            }
        }
        debug_assert!(best != usize::MAX);
        let ball = &balls[best];
        uncovered.retain(|&w| ball[w] > half);
        count += 1;
        let _ = x;
    }
    count
}

/// One-shot metrics record for the JSON interface.
pub fn graph_metrics(g: &Graph, sample_budget: usize) -> GraphMetrics {
    let d = diameter(g);
    let k = doubling_constant(g, sample_budget);
    GraphMetrics {
        n: g.n(),
        m: g.m(),
        diameter: d.value,
        doubling_constant: k.constant,
        exact: d.exact && k.exact,
    }
}

/// Validate both R-net conditions by direct BFS; used by callers that want a
/// certificate rather than trusting the greedy construction.
pub fn check_r_net(g: &Graph, net: &RNet) -> Result<()> {
    let radius = net.radius as u32;
    for (i, &y) in net.centers.iter().enumerate() {
        let d = g.bfs(y);
        for &z in &net.centers[i + 1..] {
            if d[z] <= radius {
                return Err(Error::Invalid(format!(
                    "centers {y} and {z} are at distance {} <= R = {radius}",
                    d[z]
                )));
            }
        }
        for &w in &net.clusters[i] {
            if d[w] > radius {
                return Err(Error::Invalid(format!(
                    "node {w} is at distance {} > R from its center {y}",
                    d[w]
                )));
            }
        }
    }
    let mut seen = vec![false; g.n()];
    for cluster in &net.clusters {
        for &w in cluster {
            if seen[w] {
                return Err(Error::Invalid(format!("node {w} in two clusters")));
            }
            seen[w] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Invalid("clusters do not partition V".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_diameter_exhaustive() {
        for n in 3..=256 {
            let g = Graph::ring(n).unwrap();
            let d = diameter(&g);
            assert!(d.exact);
            assert_eq!(d.value, n / 2, "ring({n})");
        }
    }

    #[test]
    fn barbell_12_diameter() {
        let g = Graph::barbell(12).unwrap();
        assert_eq!(diameter(&g).value, 3);
    }

    #[test]
    fn grid_2_4_diameter() {
        let g = Graph::grid(2, 4).unwrap();
        assert_eq!(diameter(&g).value, 6);
    }

    #[test]
    fn r_net_ring8() {
        let g = Graph::ring(8).unwrap();
        let net = greedy_r_net(&g, 2);
        assert!(net.centers.len() == 2 || net.centers.len() == 3);
        check_r_net(&g, &net).unwrap();
    }

    #[test]
    fn r_net_at_diameter() {
        for g in [Graph::ring(9).unwrap(), Graph::grid(2, 4).unwrap()] {
            let d = diameter(&g).value;
            let net = greedy_r_net(&g, d);
            assert!(!net.centers.is_empty());
            assert_eq!(net.centers[0], 0, "greedy scan starts at index 0");
            check_r_net(&g, &net).unwrap();
        }
    }

    #[test]
    fn r_net_deterministic() {
        let g = Graph::grid(2, 6).unwrap();
        let a = greedy_r_net(&g, 3);
        let b = greedy_r_net(&g, 3);
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn doubling_ring32() {
        let g = Graph::ring(32).unwrap();
        let est = doubling_constant(&g, 0);
        assert!(est.exact);
        assert!(est.constant <= 4, "got {}", est.constant);
    }

    #[test]
    fn doubling_single_edge() {
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        let est = doubling_constant(&g, 0);
        assert_eq!(est.constant, 1);
    }

    #[test]
    fn doubling_grid_near_two_dimensional() {
        let g = Graph::grid(2, 8).unwrap();
        let est = doubling_constant(&g, 0);
        assert!(est.exact);
        let dim = est.dimension();
        assert!((1.5..=3.5).contains(&dim), "dimension estimate {dim}");
    }

    #[test]
    fn metrics_record_serializes() {
        let g = Graph::ring(16).unwrap();
        let rec = graph_metrics(&g, 0);
        let json = serde_json::to_string(&rec).unwrap();
        let back: GraphMetrics = serde_json::from_str(&json).unwrap();
        assert_eq!(back.diameter, 8);
        assert!(back.exact);
    }
}
