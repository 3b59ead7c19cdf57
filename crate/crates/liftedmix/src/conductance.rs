//! Conductance: exact cut enumeration at small n, Cheeger-style spectral
//! bracketing above.

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::spectral::spectral;

/// Exact enumeration over all cuts is limited to this many nodes.
pub const CONDUCTANCE_EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone)]
pub enum Conductance {
    /// Exact minimum with its minimizing cut (as the side containing node 0).
    Exact { phi: f64, cut: Vec<usize> },
    /// Cheeger-style interval known to contain the conductance, derived from
    /// the spectral gap of the additive reversibilization `(P + P*)/2`.
    Interval { lower: f64, upper: f64, gap: f64 },
}

impl Conductance {
    pub fn value_or_upper(&self) -> f64 {
        match self {
            Conductance::Exact { phi, .. } => *phi,
            Conductance::Interval { upper, .. } => *upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductanceMode {
    Exact,
    SpectralBounds,
}

/// `Phi(P) = min_S cross-flow(S) / (pi(S) pi(V\S))`.
///
/// Exact mode enumerates every cut with node 0 on the inside (cross-flow is
/// direction-symmetric at stationarity) via Gray-code updates. Spectral mode
/// returns the bracketing interval instead.
pub fn conductance(chain: &Chain, mode: ConductanceMode) -> Result<Conductance> {
    match mode {
        ConductanceMode::Exact => conductance_exact(chain),
        ConductanceMode::SpectralBounds => conductance_interval(chain),
    }
}

fn conductance_exact(chain: &Chain) -> Result<Conductance> {
    let n = chain.n();
    if n > CONDUCTANCE_EXACT_LIMIT {
        return Err(Error::ExactModeTooLarge {
            n,
            limit: CONDUCTANCE_EXACT_LIMIT,
            hint: "spectral-bounds mode",
        });
    }
    if n < 2 {
        return Err(Error::Invalid("conductance needs at least 2 states".into()));
    }
    let q = chain.ergodic_flow();
    let pi = chain.pi();

    // adjacency of Q for incremental cross-flow updates
    let out_edges: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let (cols, vals) = q.row(i);
            cols.iter()
                .zip(vals)
                .filter(|(&j, _)| j != i)
                .map(|(&j, &v)| (j, v))
                .collect()
        })
        .collect();
    let in_edges: Vec<Vec<(usize, f64)>> = {
        let qt = q.transpose();
        (0..n)
            .map(|i| {
                let (cols, vals) = qt.row(i);
                cols.iter()
                    .zip(vals)
                    .filter(|(&j, _)| j != i)
                    .map(|(&j, &v)| (j, v))
                    .collect()
            })
            .collect()
    };

    // state: S = {0} initially; Gray code walks the remaining n-1 bits
    let mut in_s = vec![false; n];
    in_s[0] = true;
    let mut pi_s = pi[0];
    let mut cross: f64 = out_edges[0].iter().map(|&(_, v)| v).sum();

    let mut best_phi = f64::INFINITY;
    let mut best_mask: u64 = 1;
    let mut mask: u64 = 1;

    let consider = |pi_s: f64, cross: f64, mask: u64, best_phi: &mut f64, best_mask: &mut u64| {
        let denom = pi_s * (1.0 - pi_s);
        if denom > 0.0 {
            let phi = cross / denom;
            if phi < *best_phi {
                *best_phi = phi;
                *best_mask = mask;
            }
        }
    };
    consider(pi_s, cross, mask, &mut best_phi, &mut best_mask);

    let steps = (1u64 << (n - 1)) - 1;
    let mut prev_gray = 0u64;
    for i in 1..=steps {
        let gray = i ^ (i >> 1);
        let flipped_bit = (gray ^ prev_gray).trailing_zeros() as usize;
        prev_gray = gray;
        let v = flipped_bit + 1; // node 0 is pinned inside S
        if !in_s[v] {
            // v joins S: gains its out-flow to outside, loses in-flow from S
            for &(j, w) in &out_edges[v] {
                if !in_s[j] {
                    cross += w;
                }
            }
            for &(j, w) in &in_edges[v] {
                if in_s[j] {
                    cross -= w;
                }
            }
            in_s[v] = true;
            pi_s += pi[v];
            mask |= 1 << v;
        } else {
            in_s[v] = false;
            for &(j, w) in &out_edges[v] {
                if !in_s[j] {
                    cross -= w;
                }
            }
            for &(j, w) in &in_edges[v] {
                if in_s[j] {
                    cross += w;
                }
            }
            pi_s -= pi[v];
            mask &= !(1 << v);
        }
        if mask != (1u64 << n) - 1 {
            consider(pi_s, cross, mask, &mut best_phi, &mut best_mask);
        }
    }

    let cut: Vec<usize> = (0..n).filter(|&v| best_mask >> v & 1 == 1).collect();
    // re-evaluate the winning cut directly from Q to shed accumulated error
    let phi = evaluate_cut(chain, &cut);
    Ok(Conductance::Exact { phi, cut })
}

/// Evaluate `Phi` of one explicit cut directly from the ergodic flow.
pub fn evaluate_cut(chain: &Chain, cut: &[usize]) -> f64 {
    let n = chain.n();
    let mut in_s = vec![false; n];
    for &v in cut {
        in_s[v] = true;
    }
    let q = chain.ergodic_flow();
    let mut cross = 0.0;
    for (i, j, v) in q.iter() {
        if in_s[i] && !in_s[j] {
            cross += v;
        }
    }
    let pi_s: f64 = cut.iter().map(|&v| chain.pi()[v]).sum();
    cross / (pi_s * (1.0 - pi_s))
}

fn conductance_interval(chain: &Chain) -> Result<Conductance> {
    // Phi(P) = Phi((P + P*)/2): cross-flow of the symmetrized flow matrix is
    // the average of the two directions, which agree at stationarity.
    let rev = chain.reverse();
    let n = chain.n();
    let mut triplets: Vec<_> = chain.p().iter().map(|(i, j, v)| (i, j, v / 2.0)).collect();
    triplets.extend(rev.p().iter().map(|(i, j, v)| (i, j, v / 2.0)));
    let sym = Chain::from_parts(
        crate::chain::SparseMatrix::from_triplets(n, &triplets),
        chain.pi().to_vec(),
    )?;
    let rep = spectral(&sym)?;
    let gap = rep.gap.expect("additive reversibilization is reversible");
    // min-normalized conductance obeys gap/2 <= Phi_min <= sqrt(2 gap); the
    // product normalization used here is within a factor 2 above it.
    Ok(Conductance::Interval {
        lower: gap / 2.0,
        upper: 2.0 * (2.0 * gap).sqrt(),
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::SparseMatrix;
    use crate::graph::Graph;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn two_state_flat_chain() {
        let p = SparseMatrix::from_triplets(
            2,
            &[(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)],
        );
        let c = Chain::from_parts(p, uniform(2)).unwrap();
        match conductance(&c, ConductanceMode::Exact).unwrap() {
            Conductance::Exact { phi, cut } => {
                assert!((phi - 1.0).abs() < 1e-12);
                assert_eq!(cut, vec![0]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn ring8_exact_brute_force_agrees() {
        let g = Graph::ring(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap();
        let got = match conductance(&c, ConductanceMode::Exact).unwrap() {
            Conductance::Exact { phi, cut } => {
                // the minimizing cut must reproduce phi when re-evaluated
                assert!((evaluate_cut(&c, &cut) - phi).abs() < 1e-12);
                phi
            }
            _ => unreachable!(),
        };
        // independent brute force over all 127 cuts containing node 0
        let mut best = f64::INFINITY;
        let q = c.ergodic_flow();
        for mask in 1u32..(1 << 8) - 1 {
            if mask & 1 == 0 {
                continue;
            }
            let mut cross = 0.0;
            for (i, j, v) in q.iter() {
                if i != j && mask >> i & 1 == 1 && mask >> j & 1 == 0 {
                    cross += v;
                }
            }
            let pi_s = (mask.count_ones() as f64) / 8.0;
            best = best.min(cross / (pi_s * (1.0 - pi_s)));
        }
        assert!((got - best).abs() < 1e-12);
        // consistency with the spectral interval
        match conductance(&c, ConductanceMode::SpectralBounds).unwrap() {
            Conductance::Interval { lower, upper, .. } => {
                assert!(got <= upper + 1e-12);
                assert!(got >= lower - 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_mode_rejects_large_n() {
        let g = Graph::ring(30).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(30)).unwrap();
        assert!(matches!(
            conductance(&c, ConductanceMode::Exact),
            Err(Error::ExactModeTooLarge { hint: "spectral-bounds mode", .. })
        ));
    }

    #[test]
    fn barbell_inverse_phi_grows_quadratically() {
        let mut pts = Vec::new();
        for n in [8usize, 12, 16] {
            let g = Graph::barbell(n).unwrap();
            let c = Chain::uniform_neighbor_walk(&g).unwrap();
            let phi = match conductance(&c, ConductanceMode::Exact).unwrap() {
                Conductance::Exact { phi, .. } => phi,
                _ => unreachable!(),
            };
            pts.push(((n as f64).ln(), (1.0 / phi).ln()));
        }
        let slope = crate::testutil::ols_slope(&pts);
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }
}
