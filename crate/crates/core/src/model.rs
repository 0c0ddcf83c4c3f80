//! Ising model representation, energy and local fields.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin configuration with every entry in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((position, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin { position, value });
        }
        Ok(Self(spins))
    }

    /// All spins up.
    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Independent fair coin per spin.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut spins = vec![1i8; n];
        randomize(&mut spins, rng);
        Self(spins)
    }

    /// Configuration whose spin `k` is +1 exactly when bit `k` of `index` is set.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|k| if (index >> k) & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// Mutable access for kernels. Callers must keep entries in {-1, +1}.
    pub(crate) fn as_mut_slice(&mut self) -> &mut [i8] {
        &mut self.0
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinConfig::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(s: SpinConfig) -> Self {
        s.0
    }
}

/// Overwrites every spin with an independent fair coin.
pub(crate) fn randomize<R: Rng + ?Sized>(spins: &mut [i8], rng: &mut R) {
    for s in spins.iter_mut() {
        *s = if rng.gen::<bool>() { 1 } else { -1 };
    }
}

/// Undirected coupling, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub coupling: f64,
    pub edge: usize,
}

/// Two-layer split: vertices `0..n0` form the first layer, `n0..n0+n1` the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layers {
    pub n0: usize,
    pub n1: usize,
}

impl Layers {
    pub fn first(&self) -> std::ops::Range<usize> {
        0..self.n0
    }

    pub fn second(&self) -> std::ops::Range<usize> {
        self.n0..self.n0 + self.n1
    }

    pub fn layer_of(&self, v: usize) -> usize {
        usize::from(v >= self.n0)
    }
}

/// Local field `phi_i = beta * (h_i + sum_j J_ij s_j)` seen by one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalField {
    pub phi: f64,
}

impl ConditionalField {
    /// Field with the contribution of neighbour `j` removed:
    /// `psi_{i:j} = phi_i - beta J_ij s_j`.
    pub fn without(&self, beta: f64, coupling: f64, s_j: i8) -> f64 {
        self.phi - beta * coupling * f64::from(s_j)
    }
}

/// Ising model with energy `E(x) = -sum_i h_i x_i - sum_(i,j) J_ij x_i x_j`.
///
/// Immutable after construction. Couplings are keyed on the unordered pair, so
/// `coupling(i, j) == coupling(j, i)` always holds.
#[derive(Debug, Clone)]
pub struct IsingModel {
    n: usize,
    biases: Vec<f64>,
    edges: Vec<Edge>,
    neighbors: Vec<Vec<Neighbor>>,
    edge_index: HashMap<(usize, usize), usize>,
    layers: Option<Layers>,
}

impl PartialEq for IsingModel {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.biases == other.biases && self.edges == other.edges && self.layers == other.layers
    }
}

impl IsingModel {
    /// Builds a model from biases and `(i, j, J_ij)` triples in any orientation.
    pub fn new(n: usize, biases: Vec<f64>, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("a model needs at least one vertex".into()));
        }
        if biases.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: biases.len(),
            });
        }
        if let Some(i) = biases.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidModel(format!("bias of vertex {i} is not finite")));
        }
        let mut edges = Vec::with_capacity(couplings.len());
        let mut edge_index = HashMap::with_capacity(couplings.len());
        let mut neighbors = vec![Vec::new(); n];
        for (a, b, coupling) in couplings {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { index: a.max(b), n });
            }
            if a == b {
                return Err(Error::InvalidModel(format!("self-edge on vertex {a}")));
            }
            if !coupling.is_finite() {
                return Err(Error::InvalidModel(format!("coupling ({a}, {b}) is not finite")));
            }
            let (i, j) = (a.min(b), a.max(b));
            let id = edges.len();
            if edge_index.insert((i, j), id).is_some() {
                return Err(Error::InvalidModel(format!("duplicate edge ({i}, {j})")));
            }
            edges.push(Edge { i, j, coupling });
            neighbors[i].push(Neighbor {
                vertex: j,
                coupling,
                edge: id,
            });
            neighbors[j].push(Neighbor {
                vertex: i,
                coupling,
                edge: id,
            });
        }
        Ok(Self {
            n,
            biases,
            edges,
            neighbors,
            edge_index,
            layers: None,
        })
    }

    /// Attaches a two-layer split. Every edge must cross the layers.
    pub fn with_layers(mut self, layers: Layers) -> Result<Self> {
        if layers.n0 == 0 || layers.n1 == 0 || layers.n0 + layers.n1 != self.n {
            return Err(Error::InvalidModel(format!(
                "layers [{}, {}] do not partition {} vertices",
                layers.n0, layers.n1, self.n
            )));
        }
        if let Some(e) = self.edges.iter().find(|e| layers.layer_of(e.i) == layers.layer_of(e.j)) {
            return Err(Error::InvalidModel(format!(
                "edge ({}, {}) lies within one layer",
                e.i, e.j
            )));
        }
        self.layers = Some(layers);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn layers(&self) -> Option<Layers> {
        self.layers
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_id(i, j).map(|id| self.edges[id].coupling)
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_index.get(&(i.min(j), i.max(j))).copied()
    }

    fn check_config(&self, x: &SpinConfig) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Energy of a configuration.
    pub fn energy(&self, x: &SpinConfig) -> Result<f64> {
        self.check_config(x)?;
        Ok(self.energy_of(x.as_slice()))
    }

    /// Energy without the length check; `x` must have `n` entries.
    #[inline]
    pub fn energy_of(&self, x: &[i8]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let bias: f64 = self.biases.iter().zip(x).map(|(h, &s)| h * f64::from(s)).sum();
        let pair: f64 = self.edges.iter().map(|e| e.coupling * f64::from(x[e.i] * x[e.j])).sum();
        -bias - pair
    }

    /// `h_i + sum_j J_ij x_j`, the local field before scaling by beta.
    #[inline]
    pub fn raw_field(&self, i: usize, x: &[i8]) -> f64 {
        self.neighbors[i]
            .iter()
            .fold(self.biases[i], |acc, nb| acc + nb.coupling * f64::from(x[nb.vertex]))
    }

    pub fn local_field(&self, beta: f64, i: usize, s: &SpinConfig) -> Result<ConditionalField> {
        if i >= self.n {
            return Err(Error::VertexOutOfRange { index: i, n: self.n });
        }
        self.check_config(s)?;
        Ok(ConditionalField {
            phi: beta * self.raw_field(i, s.as_slice()),
        })
    }

    /// Stable 64-bit FNV-1a digest of the parameters, recorded in output metadata.
    pub fn content_hash(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01B3;
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut eat = |word: u64| {
            for b in word.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.n as u64);
        self.biases.iter().for_each(|b| eat(b.to_bits()));
        for e in &self.edges {
            eat(e.i as u64);
            eat(e.j as u64);
            eat(e.coupling.to_bits());
        }
        if let Some(l) = self.layers {
            eat(l.n0 as u64);
            eat(l.n1 as u64);
        }
        h
    }
}
