//! Mixing-time measurement by exact evolution of row distributions.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::spectral::spectral;

/// Worst case over every start is measured up to this many states.
pub const EXACT_STARTS_LIMIT: usize = 2048;

/// Per-start step cap guarding non-mixing inputs.
pub const MIXING_STEP_CAP: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StartMode {
    /// Every state was used as a start; the measured times are exact.
    ExactAllStarts,
    /// Only the declared starts were used; the measured times are certified
    /// lower bounds on the all-starts value.
    SampledStarts { starts: Vec<usize> },
}

/// Measured mixing times at one epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub epsilon: f64,
    /// Total-variation time; exact or a lower bound per `start_mode`.
    pub tau_tv: u64,
    /// Chi-square time; exact or a lower bound per `start_mode`.
    pub tau_chi2: u64,
    pub start_mode: StartMode,
    /// Worst-case total-variation distance per step.
    pub distance_trace: Vec<f64>,
    /// Eigenvalue upper bound on `tau2(eps)` (and hence `tau(eps)`), when the
    /// multiplicative gap is positive.
    pub spectral_upper: Option<u64>,
}

impl MixingReport {
    pub fn is_exact(&self) -> bool {
        matches!(self.start_mode, StartMode::ExactAllStarts)
    }
}

/// Measure `tau(eps)` and `tau2(eps)` by sparse evolution of the start rows.
///
/// `starts = None` picks every state when `n <=` [`EXACT_STARTS_LIMIT`];
/// larger chains require a declared start set and the result is flagged a
/// lower bound, reported alongside the spectral upper bound.
pub fn tv_mixing_time(chain: &Chain, eps: f64, starts: Option<Vec<usize>>) -> Result<MixingReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    let n = chain.n();
    if n == 1 {
        return Ok(MixingReport {
            epsilon: eps,
            tau_tv: 0,
            tau_chi2: 0,
            start_mode: StartMode::ExactAllStarts,
            distance_trace: vec![0.0],
            spectral_upper: Some(0),
        });
    }
    let (start_set, mode) = match starts {
        None => {
            if n > EXACT_STARTS_LIMIT {
                return Err(Error::ExactModeTooLarge {
                    n,
                    limit: EXACT_STARTS_LIMIT,
                    hint: "a declared start set (sampled-starts mode)",
                });
            }
            ((0..n).collect::<Vec<_>>(), StartMode::ExactAllStarts)
        }
        Some(s) => {
            let mode = if s.len() == n {
                StartMode::ExactAllStarts
            } else {
                StartMode::SampledStarts { starts: s.clone() }
            };
            (s, mode)
        }
    };

    let per_start: Vec<StartRun> = start_set
        .par_iter()
        .map(|&s| evolve_start(chain, s, eps))
        .collect::<Result<_>>()?;

    let tau_tv = per_start.iter().map(|r| r.tv_cross).max().unwrap();
    let tau_chi2 = per_start.iter().map(|r| r.chi2_cross).max().unwrap();
    let trace_len = per_start.iter().map(|r| r.tv_trace.len()).max().unwrap();
    // worst-case per step; finished starts hold their last recorded value
    let mut distance_trace = vec![0.0f64; trace_len];
    for run in &per_start {
        for (t, slot) in distance_trace.iter_mut().enumerate() {
            let v = if t < run.tv_trace.len() {
                run.tv_trace[t]
            } else {
                *run.tv_trace.last().unwrap()
            };
            if v > *slot {
                *slot = v;
            }
        }
    }

    let spectral_upper = spectral(chain).ok().and_then(|rep| rep.tau2_upper(eps));

    Ok(MixingReport {
        epsilon: eps,
        tau_tv,
        tau_chi2,
        start_mode: mode,
        distance_trace,
        spectral_upper,
    })
}

struct StartRun {
    tv_cross: u64,
    chi2_cross: u64,
    tv_trace: Vec<f64>,
}

fn evolve_start(chain: &Chain, start: usize, eps: f64) -> Result<StartRun> {
    let n = chain.n();
    let pi = chain.pi();
    let mut mu = vec![0.0f64; n];
    mu[start] = 1.0;
    let mut next = vec![0.0f64; n];
    let mut tv_cross = None;
    let mut chi2_cross = None;
    let mut tv_trace = Vec::new();
    let mut t: u64 = 0;
    loop {
        let tv = 0.5 * mu.iter().zip(pi).map(|(m, p)| (m - p).abs()).sum::<f64>();
        tv_trace.push(tv);
        if tv_cross.is_none() && tv <= eps {
            tv_cross = Some(t);
        }
        if chi2_cross.is_none() {
            let chi2 = mu
                .iter()
                .zip(pi)
                .map(|(m, p)| (m - p) * (m - p) / p)
                .sum::<f64>()
                .sqrt();
            if chi2 <= eps {
                chi2_cross = Some(t);
            }
        }
        if let (Some(tv_c), Some(chi_c)) = (tv_cross, chi2_cross) {
            return Ok(StartRun { tv_cross: tv_c, chi2_cross: chi_c, tv_trace });
        }
        if t >= MIXING_STEP_CAP {
            return Err(Error::StepCapExceeded {
                cap: MIXING_STEP_CAP,
                best_error: tv_trace.last().copied().unwrap_or(1.0),
            });
        }
        chain.p().vec_mul(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::SparseMatrix;
    use crate::graph::Graph;
    use crate::testutil::uniform;

    #[test]
    fn complete_chain_mixes_in_one_step() {
        let n = 8;
        let triplets: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j, 1.0 / n as f64)))
            .collect();
        let c = Chain::from_parts(SparseMatrix::from_triplets(n, &triplets), uniform(n)).unwrap();
        let rep = tv_mixing_time(&c, 0.25, None).unwrap();
        assert_eq!(rep.tau_tv, 1);
        assert_eq!(rep.tau_chi2, 1);
        assert!(rep.is_exact());
    }

    #[test]
    fn ring16_matches_dense_power_oracle() {
        let g = Graph::ring(16).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(16)).unwrap();
        let rep = tv_mixing_time(&c, 0.25, None).unwrap();

        // dense matrix-power oracle
        let mut m = c.p().to_dense();
        let p = c.p().to_dense();
        let mut oracle = None;
        for t in 1..10_000u64 {
            let worst = (0..16)
                .map(|i| {
                    0.5 * (0..16)
                        .map(|j| (m[(i, j)] - 1.0 / 16.0).abs())
                        .sum::<f64>()
                })
                .fold(0.0f64, f64::max);
            if worst <= 0.25 {
                oracle = Some(t);
                break;
            }
            m *= &p;
        }
        // oracle indexes the distribution after t products starting at t=1
        assert_eq!(rep.tau_tv, oracle.unwrap());
    }

    #[test]
    fn trace_non_increasing_for_lazy_chain() {
        let g = Graph::ring(12).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(12)).unwrap().lazy();
        let rep = tv_mixing_time(&c, 0.1, None).unwrap();
        for w in rep.distance_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn measured_tau2_within_eigenvalue_bound() {
        for g in [Graph::ring(16).unwrap(), Graph::barbell(8).unwrap()] {
            let c = Chain::metropolis_hastings(&g, &uniform(g.n())).unwrap().lazy();
            let rep = tv_mixing_time(&c, 0.2, None).unwrap();
            let upper = rep.spectral_upper.expect("lazy chain has positive gap");
            assert!(rep.tau_chi2 <= upper, "{} > {}", rep.tau_chi2, upper);
        }
    }

    #[test]
    fn sampled_mode_is_lower_bound() {
        let g = Graph::ring(32).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(32)).unwrap();
        let exact = tv_mixing_time(&c, 0.25, None).unwrap();
        let sampled = tv_mixing_time(&c, 0.25, Some(vec![0, 5])).unwrap();
        assert!(matches!(sampled.start_mode, StartMode::SampledStarts { .. }));
        assert!(sampled.tau_tv <= exact.tau_tv);
        // by vertex transitivity of the ring every start mixes alike
        assert_eq!(sampled.tau_tv, exact.tau_tv);
    }

    #[test]
    fn rejects_bad_eps() {
        let g = Graph::ring(8).unwrap();
        let c = Chain::metropolis_hastings(&g, &uniform(8)).unwrap();
        assert!(tv_mixing_time(&c, 0.0, None).is_err());
        assert!(tv_mixing_time(&c, 1.0, None).is_err());
    }
}
