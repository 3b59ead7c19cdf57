//! Undirected connected graphs: representation, generators, edge-list IO.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// An undirected connected graph on nodes `0..n`, self-loops permitted.
///
/// Adjacency lists are sorted and symmetric; a self-loop `(v, v)` appears
/// once in `adjacency[v]`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Generator descriptors accepted by [`Graph::generate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    /// Cycle on `n >= 3` nodes.
    Ring(usize),
    /// `dim`-dimensional lattice with `side` nodes per axis.
    Grid { dim: usize, side: usize },
    /// Two complete graphs on `n/2` nodes joined by a single edge; `n` even.
    Barbell(usize),
    /// Explicit edge list, validated symmetric and connected.
    EdgeList(Vec<(usize, usize)>),
}

impl Graph {
    /// Build the named graph.
    pub fn generate(spec: &GraphSpec) -> Result<Graph> {
        match spec {
            GraphSpec::Ring(n) => Self::ring(*n),
            GraphSpec::Grid { dim, side } => Self::grid(*dim, *side),
            GraphSpec::Barbell(n) => Self::barbell(*n),
            GraphSpec::EdgeList(pairs) => Self::from_edge_list(pairs.len(), pairs),
        }
    }

    /// Cycle graph on `n` nodes.
    pub fn ring(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidGenerator(format!("ring needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, edges)
    }

    /// `dim`-dimensional grid with `side` nodes per axis (`side^dim` nodes).
    pub fn grid(dim: usize, side: usize) -> Result<Graph> {
        if dim == 0 || side < 2 {
            return Err(Error::InvalidGenerator(format!(
                "grid needs dim >= 1 and side >= 2, got dim={dim}, side={side}"
            )));
        }
        let n = side.checked_pow(dim as u32).ok_or_else(|| {
            Error::InvalidGenerator(format!("grid({dim}, {side}) overflows node count"))
        })?;
        let mut edges = Vec::new();
        let mut stride = 1usize;
        for _ in 0..dim {
            for v in 0..n {
                // coordinate along this axis
                if (v / stride) % side + 1 < side {
                    edges.push((v, v + stride));
                }
            }
            stride *= side;
        }
        Self::from_edges(n, edges)
    }

    /// Two complete graphs of `n/2` nodes connected by a single edge.
    pub fn barbell(n: usize) -> Result<Graph> {
        if n % 2 != 0 {
            return Err(Error::InvalidGenerator(format!("barbell needs even n, got {n}")));
        }
        if n < 4 {
            return Err(Error::InvalidGenerator(format!("barbell needs n >= 4, got {n}")));
        }
        let half = n / 2;
        let mut edges = Vec::new();
        for block in 0..2 {
            let base = block * half;
            for i in 0..half {
                for j in (i + 1)..half {
                    edges.push((base + i, base + j));
                }
            }
        }
        // bridge between the last node of the first clique and the first of the second
        edges.push((half - 1, half));
        Self::from_edges(n, edges)
    }

    /// Build from an explicit edge list. Rejects out-of-range endpoints,
    /// duplicate edges, and disconnected inputs (naming one separated
    /// component).
    pub fn from_edge_list(_hint: usize, pairs: &[(usize, usize)]) -> Result<Graph> {
        if pairs.is_empty() {
            return Err(Error::InvalidGenerator("empty edge list".into()));
        }
        let n = pairs.iter().map(|&(u, v)| u.max(v)).max().unwrap() + 1;
        Self::from_edges(n, pairs.to_vec())
    }

    fn from_edges(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Graph> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.1 >= n {
                return Err(Error::InvalidGenerator(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.0, e.1
                )));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            if u != v {
                adjacency[v].push(u);
            }
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }
        let g = Graph { n, edges, adjacency };
        if let Some(component) = g.disconnected_component() {
            return Err(Error::Disconnected { component });
        }
        Ok(g)
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected edge count (self-loops counted once).
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as unordered pairs `(u, v)` with `u <= v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbors of `v` (contains `v` itself if there is a self-loop).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// BFS hop distances from `src`.
    pub fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &w in &self.adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = du + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// A shortest path from `src` to `dst` as a node sequence (inclusive).
    pub fn shortest_path(&self, src: usize, dst: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.n];
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        'outer: while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    if w == dst {
                        break 'outer;
                    }
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    fn disconnected_component(&self) -> Option<Vec<usize>> {
        let dist = self.bfs(0);
        if dist.iter().all(|&d| d != u32::MAX) {
            return None;
        }
        // report the component of the lowest unreachable node
        let seed = dist.iter().position(|&d| d == u32::MAX).unwrap();
        let comp_dist = self.bfs(seed);
        Some(
            (0..self.n)
                .filter(|&v| comp_dist[v] != u32::MAX)
                .collect(),
        )
    }

    /// Parse the `u v` per-line edge-list format; `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| {
                    Error::EdgeListParse(format!("line {}: expected `u v`", lineno + 1))
                })?
                .parse()
                .map_err(|e| Error::EdgeListParse(format!("line {}: {e}", lineno + 1)))
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::EdgeListParse(format!(
                    "line {}: trailing tokens",
                    lineno + 1
                )));
            }
            pairs.push((u, v));
        }
        Ok(pairs)
    }

    /// Emit the edge-list format parsed by [`Graph::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}
