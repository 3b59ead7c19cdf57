//! Row-stochastic chains: sparse representation, construction, ergodic flow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Tolerance for identities that hold in exact arithmetic.
pub const TOL_EXACT: f64 = 1e-12;
/// Tolerance for identities derived through linear solves.
pub const TOL_SOLVE: f64 = 1e-10;

/// Dense stationary solves are attempted up to this many states.
pub const DENSE_SOLVE_LIMIT: usize = 4096;

/// Compressed sparse row matrix over `0..n` square.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates accumulate, zeros drop.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            for (j, v) in merged {
                if v != 0.0 {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        SparseMatrix { n, row_ptr, col, val }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries (all non-zero).
    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    /// Non-zero entries off the diagonal; the "size" of a chain.
    pub fn nnz_off_diagonal(&self) -> usize {
        self.iter().filter(|&(i, j, _)| i != j).count()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col[r.clone()], &self.val[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// y = A x (column-vector action).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// y = xᵀ A (row-vector action, distribution evolution).
    pub fn vec_mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        y.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += xi * v;
            }
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.n, &triplets)
    }

    /// Sparse product A·B.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.n, other.n);
        let mut triplets = Vec::new();
        let mut acc = vec![0.0f64; self.n];
        let mut touched = Vec::new();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&k, &v) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &w) in bcols.iter().zip(bvals) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += v * w;
                }
            }
            for &j in &touched {
                if acc[j] != 0.0 {
                    triplets.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
            }
            touched.clear();
        }
        SparseMatrix::from_triplets(self.n, &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }
}

/// A row-stochastic chain: sparse `P`, stationary `pi`, and the ergodic flow
/// `Q_ij = pi_i P_ij` derived on demand.
#[derive(Debug, Clone)]
pub struct Chain {
    p: SparseMatrix,
    pi: Vec<f64>,
}

impl Chain {
    /// Wrap a transition matrix and its stationary distribution, validating
    /// row sums, positivity, and stationarity.
    pub fn from_parts(p: SparseMatrix, pi: Vec<f64>) -> Result<Chain> {
        let chain = Chain { p, pi };
        chain.validate()?;
        Ok(chain)
    }

    /// Build from an ergodic flow matrix: `pi` is the row sums, `P = Q / pi`.
    /// Requires total mass 1 and balanced row/column sums.
    pub fn from_ergodic_flow(q: &SparseMatrix) -> Result<Chain> {
        let n = q.n();
        let mut row_sum = vec![0.0f64; n];
        let mut col_sum = vec![0.0f64; n];
        let mut total = 0.0;
        for (i, j, v) in q.iter() {
            if v < -TOL_EXACT {
                return Err(Error::Invalid(format!("negative ergodic flow Q[{i},{j}] = {v}")));
            }
            row_sum[i] += v;
            col_sum[j] += v;
            total += v;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("ergodic flow total {total} != 1")));
        }
        for i in 0..n {
            if (row_sum[i] - col_sum[i]).abs() > TOL_SOLVE {
                return Err(Error::Invalid(format!(
                    "ergodic flow unbalanced at node {i}: out {} vs in {}",
                    row_sum[i], col_sum[i]
                )));
            }
            if row_sum[i] <= 0.0 {
                return Err(Error::Invalid(format!("node {i} carries no stationary mass")));
            }
        }
        let triplets: Vec<_> = q.iter().map(|(i, j, v)| (i, j, v / row_sum[i])).collect();
        Chain::from_parts(SparseMatrix::from_triplets(n, &triplets), row_sum)
    }

    /// Build from raw transition rows, solving for the stationary distribution
    /// (dense solve; limited to [`DENSE_SOLVE_LIMIT`] states).
    pub fn from_rows(p: SparseMatrix) -> Result<Chain> {
        let pi = solve_stationary(&p)?;
        Chain::from_parts(p, pi)
    }

    /// Metropolis-Hastings chain on `g` targeting `pi`:
    /// `P_ij = (1/2d) min(pi_j/pi_i, 1)` on edges, remainder on the diagonal,
    /// with `d` the maximum degree.
    pub fn metropolis_hastings(g: &Graph, pi: &[f64]) -> Result<Chain> {
        validate_distribution(pi, g.n())?;
        let d = 2.0 * g.max_degree() as f64;
        let mut triplets = Vec::new();
        for i in 0..g.n() {
            let mut off = 0.0;
            for &j in g.neighbors(i) {
                if j == i {
                    continue;
                }
                let p = (pi[j] / pi[i]).min(1.0) / d;
                triplets.push((i, j, p));
                off += p;
            }
            triplets.push((i, i, 1.0 - off));
        }
        Chain::from_parts(SparseMatrix::from_triplets(g.n(), &triplets), pi.to_vec())
    }

    /// Simple random walk: next node uniform among neighbors; stationary
    /// distribution proportional to degree.
    pub fn uniform_neighbor_walk(g: &Graph) -> Result<Chain> {
        let total: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        let pi: Vec<f64> = (0..g.n()).map(|v| g.degree(v) as f64 / total as f64).collect();
        let mut triplets = Vec::new();
        for i in 0..g.n() {
            let deg = g.degree(i) as f64;
            for &j in g.neighbors(i) {
                triplets.push((i, j, 1.0 / deg));
            }
        }
        Chain::from_parts(SparseMatrix::from_triplets(g.n(), &triplets), pi)
    }

    /// The lazy chain `(I + P)/2`; same stationary distribution.
    pub fn lazy(&self) -> Chain {
        let mut triplets: Vec<_> = self.p.iter().map(|(i, j, v)| (i, j, v / 2.0)).collect();
        for i in 0..self.n() {
            triplets.push((i, i, 0.5));
        }
        Chain {
            p: SparseMatrix::from_triplets(self.n(), &triplets),
            pi: self.pi.clone(),
        }
    }

    /// The reverse chain `P*_ij = pi_j P_ji / pi_i`; same stationary
    /// distribution.
    pub fn reverse(&self) -> Chain {
        let triplets: Vec<_> = self
            .p
            .iter()
            .map(|(i, j, v)| (j, i, self.pi[i] * v / self.pi[j]))
            .collect();
        Chain {
            p: SparseMatrix::from_triplets(self.n(), &triplets),
            pi: self.pi.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn p(&self) -> &SparseMatrix {
        &self.p
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi_min(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Ergodic flow `Q_ij = pi_i P_ij`.
    pub fn ergodic_flow(&self) -> SparseMatrix {
        let triplets: Vec<_> = self.p.iter().map(|(i, j, v)| (i, j, self.pi[i] * v)).collect();
        SparseMatrix::from_triplets(self.n(), &triplets)
    }

    /// Chain size: non-zero off-diagonal entries of `P`.
    pub fn size(&self) -> usize {
        self.p.nnz_off_diagonal()
    }

    /// Reversible iff `Q` is symmetric within `tol`.
    pub fn is_reversible(&self, tol: f64) -> bool {
        let q = self.ergodic_flow();
        let symmetric = q.iter().all(|(i, j, v)| (v - q.get(j, i)).abs() <= tol);
        symmetric
    }

    /// Check the chain invariants: row sums within 1e-12 of 1, conformant
    /// non-negative entries, stationarity and flow balance within 1e-10.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.pi.len() != n {
            return Err(Error::Invalid("pi length mismatch".into()));
        }
        for (i, &p) in self.pi.iter().enumerate() {
            if !(p > 0.0) {
                return Err(Error::InvalidDistribution(format!("pi[{i}] = {p} not positive")));
            }
        }
        let mass: f64 = self.pi.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("pi sums to {mass}")));
        }
        for i in 0..n {
            let (cols, vals) = self.p.row(i);
            let mut sum = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if v < 0.0 {
                    return Err(Error::Invalid(format!("P[{i},{j}] = {v} negative")));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > TOL_EXACT {
                return Err(Error::Invalid(format!("row {i} sums to {sum}")));
            }
        }
        // pi^T P = pi^T
        let mut next = vec![0.0f64; n];
        self.p.vec_mul(&self.pi, &mut next);
        for i in 0..n {
            if (next[i] - self.pi[i]).abs() > TOL_SOLVE {
                return Err(Error::Invalid(format!(
                    "stationarity violated at {i}: (pi P)_i - pi_i = {:.3e}",
                    next[i] - self.pi[i]
                )));
            }
        }
        Ok(())
    }

    /// Conformance to a graph: `P_ij > 0` only on edges or the diagonal.
    pub fn is_conformant(&self, g: &Graph) -> bool {
        self.p.iter().all(|(i, j, _)| i == j || g.has_edge(i, j))
    }
}

fn validate_distribution(pi: &[f64], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "expected {n} entries, got {}",
            pi.len()
        )));
    }
    for (i, &p) in pi.iter().enumerate() {
        if !(p > 0.0) {
            return Err(Error::InvalidDistribution(format!("pi[{i}] = {p} has zero mass")));
        }
    }
    let mass: f64 = pi.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("pi sums to {mass}, expected 1")));
    }
    Ok(())
}

/// Solve `pi^T (P - I) = 0`, `sum pi = 1` by a dense LU factorization.
pub fn solve_stationary(p: &SparseMatrix) -> Result<Vec<f64>> {
    let n = p.n();
    if n > DENSE_SOLVE_LIMIT {
        return Err(Error::ExactModeTooLarge {
            n,
            limit: DENSE_SOLVE_LIMIT,
            hint: "a construction that supplies pi in closed form",
        });
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // rows of A: (P^T - I) with the last row replaced by the mass constraint
    let mut a = DMatrix::zeros(n, n);
    for (i, j, v) in p.iter() {
        a[(j, i)] += v;
    }
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.lu();
    let pi = lu
        .solve(&b)
        .ok_or_else(|| Error::Invalid("stationary solve: singular system".into()))?;
    Ok(pi.iter().copied().collect())
}

// --- serialization -----------------------------------------------------

/// JSON form of a chain; probabilities as decimal strings with 17 significant
/// digits so round-trips are bit-stable.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChainJson {
    pub n: usize,
    pub triplets: Vec<(usize, usize, String)>,
    pub pi: Vec<String>,
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Invalid(format!("bad decimal literal {s:?}: {e}")))
}

impl Chain {
    pub fn to_json(&self) -> ChainJson {
        ChainJson {
            n: self.n(),
            triplets: self.p.iter().map(|(i, j, v)| (i, j, fmt_f64(v))).collect(),
            pi: self.pi.iter().map(|&v| fmt_f64(v)).collect(),
        }
    }

    pub fn from_json(json: &ChainJson) -> Result<Chain> {
        let mut triplets = Vec::with_capacity(json.triplets.len());
        for (i, j, s) in &json.triplets {
            triplets.push((*i, *j, parse_f64(s)?));
        }
        let pi = json.pi.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        Chain::from_parts(SparseMatrix::from_triplets(json.n, &triplets), pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    pub(crate) fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn mh_ring_quarter_transitions() {
        let g = Graph::ring(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap();
        for i in 0..8 {
            assert!((c.p().get(i, (i + 1) % 8) - 0.25).abs() < 1e-15);
            assert!((c.p().get(i, (i + 7) % 8) - 0.25).abs() < 1e-15);
            assert!((c.p().get(i, i) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn mh_uniform_pi_reversible() {
        for g in [Graph::ring(9).unwrap(), Graph::barbell(8).unwrap(), Graph::grid(2, 4).unwrap()] {
            let c = Chain::metropolis_hastings(&g, &uniform(g.n())).unwrap();
            assert!(c.is_reversible(TOL_EXACT));
            assert!(c.is_conformant(&g));
        }
    }

    #[test]
    fn mh_star_hand_values() {
        // K_{1,3}: hub 0, leaves 1..3; uniform pi, d = max degree = 3.
        let g = Graph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(4)).unwrap();
        for leaf in 1..4 {
            assert!((c.p().get(leaf, 0) - 1.0 / 6.0).abs() < 1e-15);
            assert!((c.p().get(leaf, leaf) - 5.0 / 6.0).abs() < 1e-15);
        }
        assert!((c.p().get(0, 0) - 0.5).abs() < 1e-15);
        // stationarity by direct multiplication
        let mut out = vec![0.0; 4];
        c.p().vec_mul(c.pi(), &mut out);
        for i in 0..4 {
            assert!((out[i] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn mh_rejects_zero_mass() {
        let g = Graph::ring(4).unwrap();
        let pi = vec![0.5, 0.5, 0.0, 0.0];
        assert!(matches!(
            Chain::metropolis_hastings(&g, &pi),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn mh_nonuniform_pi_stationary() {
        let g = Graph::grid(2, 3).unwrap();
        let n = g.n();
        let raw: Vec<f64> = (0..n).map(|i| 1.0 + (i % 4) as f64).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let c = Chain::metropolis_hastings(&g, &pi).unwrap();
        c.validate().unwrap();
        assert!(c.is_reversible(TOL_EXACT));
    }

    #[test]
    fn lazy_ring_values() {
        let g = Graph::ring(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap().lazy();
        for i in 0..8 {
            assert!((c.p().get(i, i) - 0.75).abs() < 1e-15);
            assert!((c.p().get(i, (i + 1) % 8) - 0.125).abs() < 1e-15);
        }
        c.validate().unwrap();
    }

    #[test]
    fn lazy_identity_fixed_point() {
        let id = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let c = Chain::from_parts(id.clone(), uniform(3)).unwrap();
        let l = c.lazy();
        assert_eq!(l.p(), &id);
    }

    #[test]
    fn reverse_of_reversible_is_identity() {
        let g = Graph::barbell(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap();
        let r = c.reverse();
        for (i, j, v) in c.p().iter() {
            assert!((r.p().get(i, j) - v).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn reverse_directed_cycle() {
        // P_{i,i+1} = 1 with uniform pi reverses to the opposite cycle.
        let n = 5;
        let triplets: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        let c = Chain::from_parts(SparseMatrix::from_triplets(n, &triplets), uniform(n)).unwrap();
        let r = c.reverse();
        for i in 0..n {
            assert!((r.p().get(i, (i + n - 1) % n) - 1.0).abs() < 1e-15);
        }
        // involution
        let rr = r.reverse();
        for (i, j, v) in c.p().iter() {
            assert!((rr.p().get(i, j) - v).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn ergodic_flow_balance() {
        let g = Graph::grid(2, 4).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(16)).unwrap();
        let q = c.ergodic_flow();
        let mut total = 0.0;
        let mut row = vec![0.0; 16];
        let mut colsum = vec![0.0; 16];
        for (i, j, v) in q.iter() {
            total += v;
            row[i] += v;
            colsum[j] += v;
        }
        assert!((total - 1.0).abs() < TOL_EXACT);
        for i in 0..16 {
            assert!((row[i] - c.pi()[i]).abs() < TOL_SOLVE);
            assert!((colsum[i] - c.pi()[i]).abs() < TOL_SOLVE);
        }
    }

    #[test]
    fn from_ergodic_flow_round_trip() {
        let g = Graph::ring(6).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(6)).unwrap();
        let c2 = Chain::from_ergodic_flow(&c.ergodic_flow()).unwrap();
        for (i, j, v) in c.p().iter() {
            assert!((c2.p().get(i, j) - v).abs() < TOL_EXACT);
        }
    }

    #[test]
    fn stationary_solve_matches_closed_form() {
        let g = Graph::barbell(8).unwrap();
        let c = Chain::uniform_neighbor_walk(&g).unwrap();
        let solved = solve_stationary(c.p()).unwrap();
        for i in 0..8 {
            assert!((solved[i] - c.pi()[i]).abs() < TOL_SOLVE);
        }
    }

    #[test]
    fn size_counts_off_diagonal() {
        let g = Graph::ring(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap();
        assert_eq!(c.size(), 16);
    }

    #[test]
    fn json_round_trip_bit_stable() {
        let g = Graph::grid(2, 3).unwrap();
        let n = g.n();
        let raw: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let c = Chain::metropolis_hastings(&g, &pi).unwrap();
        let json = serde_json::to_string(&c.to_json()).unwrap();
        let parsed: ChainJson = serde_json::from_str(&json).unwrap();
        let c2 = Chain::from_json(&parsed).unwrap();
        for (i, j, v) in c.p().iter() {
            assert_eq!(c2.p().get(i, j).to_bits(), v.to_bits());
        }
        for i in 0..n {
            assert_eq!(c2.pi()[i].to_bits(), c.pi()[i].to_bits());
        }
    }

    #[test]
    fn single_state_chain() {
        let p = SparseMatrix::from_triplets(1, &[(0, 0, 1.0)]);
        let c = Chain::from_rows(p).unwrap();
        assert_eq!(c.pi(), &[1.0]);
    }
}
