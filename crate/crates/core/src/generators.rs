//! Random model families: Erdős–Rényi graphs, Hopfield-type couplings and
//! two-layer (bipartite) graphs.
//!
//! Draw order is part of the contract so that a seed reproduces the same
//! instance: biases first, in vertex order, then candidate pairs in
//! lexicographic order, each pair drawing an inclusion variate in `[0, 1)`
//! and, when included, its coupling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IsingModel, Layers};

/// Half-open interval `[low, high)` for uniform parameter draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite()) || low > high {
            return Err(Error::InvalidParameter(format!(
                "parameter range [{low}, {high}) is not a finite interval"
            )));
        }
        Ok(Self { low, high })
    }

    /// `[-a, a)`.
    pub fn symmetric(a: f64) -> Self {
        Self { low: -a, high: a }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.gen_range(self.low..self.high)
        }
    }
}

impl Default for ParamRange {
    fn default() -> Self {
        Self::symmetric(1.0)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "connection probability {p} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Random graph in which each of the `n(n-1)/2` pairs is connected with
/// probability `p`. Isolated vertices are kept.
pub fn generate_random_graph_model<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    range: ParamRange,
    rng: &mut R,
) -> Result<IsingModel> {
    check_probability(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let biases: Vec<f64> = (0..n).map(|_| range.sample(rng)).collect();
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                couplings.push((i, j, range.sample(rng)));
            }
        }
    }
    IsingModel::new(n, biases, couplings)
}

/// Stored memory patterns, `patterns[k][i]` is pattern `k` at vertex `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopfieldPatterns {
    pub n: usize,
    pub patterns: Vec<Vec<i8>>,
}

/// Draws `m` patterns of `n` fair ±1 coins, pattern by pattern.
pub fn draw_hopfield_patterns<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<HopfieldPatterns> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("Hopfield model needs n >= 1 and m >= 1".into()));
    }
    let patterns = (0..m)
        .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .collect();
    Ok(HopfieldPatterns { n, patterns })
}

/// Hebbian couplings `J_ij = (1/n) sum_k xi_ik xi_jk` on the complete graph, zero biases.
pub fn hopfield_from_patterns(p: &HopfieldPatterns) -> Result<IsingModel> {
    let n = p.n;
    let mut couplings = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let overlap: i32 = p.patterns.iter().map(|xi| i32::from(xi[i]) * i32::from(xi[j])).sum();
            couplings.push((i, j, f64::from(overlap) / n as f64));
        }
    }
    IsingModel::new(n, vec![0.0; n], couplings)
}

pub fn generate_hopfield_model<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<IsingModel> {
    hopfield_from_patterns(&draw_hopfield_patterns(n, m, rng)?)
}

/// Two-layer model: vertices `0..n0` and `n0..n0+n1`, each cross-layer pair
/// connected with probability `p`; no within-layer edges.
pub fn generate_bipartite_model<R: Rng + ?Sized>(
    n0: usize,
    n1: usize,
    p: f64,
    range: ParamRange,
    rng: &mut R,
) -> Result<IsingModel> {
    check_probability(p)?;
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidParameter("both layers need at least one vertex".into()));
    }
    let n = n0 + n1;
    let biases: Vec<f64> = (0..n).map(|_| range.sample(rng)).collect();
    let mut couplings = Vec::new();
    for i in 0..n0 {
        for j in n0..n {
            if rng.gen::<f64>() < p {
                couplings.push((i, j, range.sample(rng)));
            }
        }
    }
    IsingModel::new(n, biases, couplings)?.with_layers(Layers { n0, n1 })
}
