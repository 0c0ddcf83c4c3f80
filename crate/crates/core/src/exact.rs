//! Exact oracles: full enumeration and two-layer analytic marginalisation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IsingModel, SpinConfig};
use crate::numeric::{ln_two_cosh, LogSumExp};

/// Largest vertex count (or first-layer size) the enumerators accept.
pub const MAX_EXACT_VERTICES: usize = 25;

/// Steps between exact energy re-evaluations during Gray-code enumeration.
const RESYNC_INTERVAL: u64 = 1 << 12;

/// Exact thermodynamic quantities at one inverse temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub beta: f64,
    /// `ln Z(beta)`.
    pub log_partition: f64,
    /// `F = -ln Z / beta`; `None` at `beta = 0`.
    pub free_energy: Option<f64>,
    pub magnetization: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub pair_moment: Vec<f64>,
    pub covariance: Vec<f64>,
}

impl ExactSolution {
    fn assemble(
        model: &IsingModel,
        beta: f64,
        log_partition: f64,
        magnetization: Vec<f64>,
        pair_moment: Vec<f64>,
    ) -> Self {
        let edges = model.edge_pairs();
        let covariance = edges
            .iter()
            .zip(&pair_moment)
            .map(|(&(i, j), c)| c - magnetization[i] * magnetization[j])
            .collect();
        Self {
            beta,
            log_partition,
            free_energy: (beta > 0.0).then(|| -log_partition / beta),
            magnetization,
            edges,
            pair_moment,
            covariance,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature {beta} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn check_size(size: usize) -> Result<()> {
    if size > MAX_EXACT_VERTICES {
        return Err(Error::TooLarge {
            size,
            limit: MAX_EXACT_VERTICES,
        });
    }
    Ok(())
}

/// Visits all `2^n` configurations in reflected Gray-code order, passing the
/// configuration, its Gray index and its energy. The energy is updated in
/// O(deg) per step and re-evaluated exactly every few thousand steps.
pub fn for_each_configuration(model: &IsingModel, mut visit: impl FnMut(&[i8], u64, f64)) -> Result<()> {
    let n = model.n();
    check_size(n)?;
    let mut x = vec![-1i8; n];
    let mut energy = model.energy_of(&x);
    visit(&x, 0, energy);
    let total = 1u64 << n;
    for t in 1..total {
        let k = t.trailing_zeros() as usize;
        let old = f64::from(x[k]);
        energy += 2.0 * old * model.raw_field(k, &x);
        x[k] = -x[k];
        if t % RESYNC_INTERVAL == 0 {
            energy = model.energy_of(&x);
        }
        visit(&x, t ^ (t >> 1), energy);
    }
    Ok(())
}

/// Weighted moment accumulators with a running log-space shift.
struct MomentAccumulator {
    shift: f64,
    z: f64,
    m: Vec<f64>,
    c: Vec<f64>,
}

impl MomentAccumulator {
    fn new(n: usize, edges: usize) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            z: 0.0,
            m: vec![0.0; n],
            c: vec![0.0; edges],
        }
    }

    /// Returns the linear weight to use for a term with log weight `lw`.
    fn weight(&mut self, lw: f64) -> f64 {
        if lw > self.shift {
            let scale = (self.shift - lw).exp();
            self.z *= scale;
            self.m.iter_mut().for_each(|v| *v *= scale);
            self.c.iter_mut().for_each(|v| *v *= scale);
            self.shift = lw;
        }
        (lw - self.shift).exp()
    }

    fn finish(self) -> (f64, Vec<f64>, Vec<f64>) {
        let z = self.z;
        (
            self.shift + z.ln(),
            self.m.into_iter().map(|v| v / z).collect(),
            self.c.into_iter().map(|v| v / z).collect(),
        )
    }
}

/// Exhaustive sum over all configurations.
pub fn exact_solve(model: &IsingModel, beta: f64) -> Result<ExactSolution> {
    check_beta(beta)?;
    let edges = model.edges();
    let mut acc = MomentAccumulator::new(model.n(), edges.len());
    for_each_configuration(model, |x, _, energy| {
        let w = acc.weight(-beta * energy);
        acc.z += w;
        for (m, &s) in acc.m.iter_mut().zip(x) {
            *m += w * f64::from(s);
        }
        for (c, e) in acc.c.iter_mut().zip(edges) {
            *c += w * f64::from(x[e.i] * x[e.j]);
        }
    })?;
    let (log_partition, magnetization, pair_moment) = acc.finish();
    Ok(ExactSolution::assemble(
        model,
        beta,
        log_partition,
        magnetization,
        pair_moment,
    ))
}

/// Exact solution of a two-layer model by enumerating only the first layer
/// and summing the second layer out analytically:
/// `P(x_0) ∝ exp(beta sum_i h_i x_i + sum_j ln 2cosh(beta (h_j + sum_k J_kj x_k)))`.
pub fn exact_solve_bipartite(model: &IsingModel, beta: f64) -> Result<ExactSolution> {
    check_beta(beta)?;
    let layers = model.layers().ok_or(Error::MissingLayers)?;
    check_size(layers.n0)?;
    let n = model.n();
    let edges = model.edges();
    // Cross couplings seen by each second-layer vertex: (first-layer vertex, J).
    let inbound: Vec<Vec<(usize, f64)>> = layers
        .second()
        .map(|j| model.neighbors(j).iter().map(|nb| (nb.vertex, nb.coupling)).collect())
        .collect();
    let h = model.biases();

    let mut acc = MomentAccumulator::new(n, edges.len());
    let mut x0 = vec![-1i8; layers.n0];
    let mut fields = vec![0.0; layers.n1];
    let mut tanh_fields = vec![0.0; layers.n1];
    for index in 0..(1u64 << layers.n0) {
        for (k, s) in x0.iter_mut().enumerate() {
            *s = if (index >> k) & 1 == 1 { 1 } else { -1 };
        }
        let mut lw: f64 = layers.first().map(|i| beta * h[i] * f64::from(x0[i])).sum();
        for (jj, j) in layers.second().enumerate() {
            let theta = beta * inbound[jj].iter().fold(h[j], |a, &(k, c)| a + c * f64::from(x0[k]));
            fields[jj] = theta;
            tanh_fields[jj] = theta.tanh();
            lw += ln_two_cosh(theta);
        }
        let w = acc.weight(lw);
        acc.z += w;
        for i in layers.first() {
            acc.m[i] += w * f64::from(x0[i]);
        }
        for (jj, j) in layers.second().enumerate() {
            acc.m[j] += w * tanh_fields[jj];
        }
        for (c, e) in acc.c.iter_mut().zip(edges) {
            // Edges always run first layer -> second layer with i < j.
            *c += w * f64::from(x0[e.i]) * tanh_fields[e.j - layers.n0];
        }
    }
    let (log_partition, magnetization, pair_moment) = acc.finish();
    Ok(ExactSolution::assemble(
        model,
        beta,
        log_partition,
        magnetization,
        pair_moment,
    ))
}

/// The full Boltzmann distribution, tabulated for exact i.i.d. sampling.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    n: usize,
    /// Probabilities indexed by [`SpinConfig::from_index`] order.
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    pub fn new(model: &IsingModel, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let n = model.n();
        check_size(n)?;
        let mut log_weights = vec![0.0; 1usize << n];
        let mut lse = LogSumExp::new();
        for_each_configuration(model, |_, index, energy| {
            log_weights[index as usize] = -beta * energy;
            lse.push(-beta * energy);
        })?;
        let log_partition = lse.value();
        let probabilities: Vec<f64> = log_weights.iter().map(|lw| (lw - log_partition).exp()).collect();
        let mut running = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                running += p;
                running
            })
            .collect();
        Ok(Self {
            n,
            probabilities,
            cumulative,
            log_partition,
        })
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// `P(x)` for the configuration with index `index`.
    pub fn probability(&self, index: u64) -> f64 {
        self.probabilities[index as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfig {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.gen::<f64>() * total;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        SpinConfig::from_index(self.n, idx as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_bipartite_model, generate_random_graph_model, ParamRange};
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn close(a: &ExactSolution, b: &ExactSolution, tol: f64) {
        assert_abs_diff_eq!(a.log_partition, b.log_partition, epsilon = tol);
        for (x, y) in a.magnetization.iter().zip(&b.magnetization) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
        for (x, y) in a.pair_moment.iter().zip(&b.pair_moment) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
        for (x, y) in a.covariance.iter().zip(&b.covariance) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
    }

    /// Direct sum over configurations in index order, no Gray code, no shift.
    fn brute_force(model: &IsingModel, beta: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let n = model.n();
        let mut z = 0.0;
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; model.edges().len()];
        for idx in 0..(1u64 << n) {
            let x = SpinConfig::from_index(n, idx);
            let w = (-beta * model.energy(&x).unwrap()).exp();
            z += w;
            for i in 0..n {
                m[i] += w * f64::from(x.as_slice()[i]);
            }
            for (k, e) in model.edges().iter().enumerate() {
                c[k] += w * f64::from(x.as_slice()[e.i] * x.as_slice()[e.j]);
            }
        }
        (
            z.ln(),
            m.iter().map(|v| v / z).collect(),
            c.iter().map(|v| v / z).collect(),
        )
    }

    #[test]
    fn single_spin_closed_form() {
        let m = IsingModel::new(1, vec![0.5], vec![]).unwrap();
        let s = exact_solve(&m, 1.0).unwrap();
        assert_abs_diff_eq!(s.magnetization[0], 0.5f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.log_partition, (2.0 * 0.5f64.cosh()).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.free_energy.unwrap(), -(2.0 * 0.5f64.cosh()).ln(), epsilon = 1e-15);
    }

    #[test]
    fn two_spin_closed_form() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        let s = exact_solve(&m, 1.0).unwrap();
        assert_abs_diff_eq!(s.pair_moment[0], 1f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.magnetization[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.magnetization[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn free_model_is_uniform() {
        let m = IsingModel::new(6, vec![0.0; 6], vec![(0, 1, 0.0), (2, 5, 0.0)]).unwrap();
        for beta in [0.0, 0.3, 4.0] {
            let s = exact_solve(&m, beta).unwrap();
            assert_abs_diff_eq!(s.log_partition, 6.0 * 2f64.ln(), epsilon = 1e-12);
            assert!(s.magnetization.iter().chain(&s.pair_moment).all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn zero_beta_is_uniform_for_any_model() {
        let m = generate_random_graph_model(9, 0.6, ParamRange::default(), &mut seeded(3)).unwrap();
        let s = exact_solve(&m, 0.0).unwrap();
        assert_abs_diff_eq!(s.log_partition, 9.0 * 2f64.ln(), epsilon = 1e-12);
        assert!(s.magnetization.iter().chain(&s.pair_moment).all(|v| v.abs() < 1e-14));
        assert_eq!(s.free_energy, None);
    }

    #[test]
    fn gray_enumeration_matches_brute_force() {
        let mut rng = seeded(8);
        for _ in 0..5 {
            let m = generate_random_graph_model(10, 0.5, ParamRange::default(), &mut rng).unwrap();
            for beta in [0.1, 1.0, 3.0] {
                let s = exact_solve(&m, beta).unwrap();
                let (lz, mag, pair) = brute_force(&m, beta);
                assert_abs_diff_eq!(s.log_partition, lz, epsilon = 1e-11);
                for (a, b) in s.magnetization.iter().zip(&mag) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-11);
                }
                for (a, b) in s.pair_moment.iter().zip(&pair) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn gray_enumeration_visits_every_configuration_once() {
        let m = generate_random_graph_model(8, 0.5, ParamRange::default(), &mut seeded(1)).unwrap();
        let mut seen = vec![false; 256];
        for_each_configuration(&m, |x, idx, e| {
            assert!(!seen[idx as usize]);
            seen[idx as usize] = true;
            assert_eq!(SpinConfig::from_index(8, idx).as_slice(), x);
            assert!((e - m.energy_of(x)).abs() < 1e-12);
        })
        .unwrap();
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn large_beta_does_not_overflow() {
        let m = generate_random_graph_model(10, 1.0, ParamRange::default(), &mut seeded(2)).unwrap();
        let s = exact_solve(&m, 500.0).unwrap();
        assert!(s.log_partition.is_finite());
        assert!(s.magnetization.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn covariance_identity_holds_exactly() {
        let m = generate_random_graph_model(8, 0.5, ParamRange::default(), &mut seeded(4)).unwrap();
        let s = exact_solve(&m, 1.3).unwrap();
        for (k, &(i, j)) in s.edges.iter().enumerate() {
            assert_eq!(
                s.covariance[k],
                s.pair_moment[k] - s.magnetization[i] * s.magnetization[j]
            );
        }
    }

    #[test]
    fn isolated_vertex_magnetisation_is_tanh() {
        let m = IsingModel::new(4, vec![0.3, -0.7, 0.1, 0.9], vec![(0, 1, 0.5), (1, 2, -0.4)]).unwrap();
        let s = exact_solve(&m, 1.7).unwrap();
        assert_abs_diff_eq!(s.magnetization[3], (1.7f64 * 0.9).tanh(), epsilon = 1e-15);
    }

    #[test]
    fn size_guard() {
        let m = IsingModel::new(26, vec![0.0; 26], vec![]).unwrap();
        assert!(matches!(exact_solve(&m, 1.0), Err(Error::TooLarge { size: 26, .. })));
        assert!(exact_solve(&IsingModel::new(2, vec![0.0; 2], vec![]).unwrap(), -1.0).is_err());
    }

    #[test]
    fn bipartite_two_spin() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)])
            .unwrap()
            .with_layers(crate::model::Layers { n0: 1, n1: 1 })
            .unwrap();
        let s = exact_solve_bipartite(&m, 1.0).unwrap();
        assert_abs_diff_eq!(s.pair_moment[0], 1f64.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn bipartite_factorised_when_uncoupled() {
        let m = generate_bipartite_model(3, 4, 0.0, ParamRange::default(), &mut seeded(5)).unwrap();
        let beta = 1.4;
        let s = exact_solve_bipartite(&m, beta).unwrap();
        for (i, h) in m.biases().iter().enumerate() {
            assert_abs_diff_eq!(s.magnetization[i], (beta * h).tanh(), epsilon = 1e-14);
        }
    }

    #[test]
    fn bipartite_matches_full_enumeration() {
        let mut rng = seeded(6);
        for (n0, n1, p) in [(3, 4, 0.5), (2, 6, 1.0), (5, 7, 0.7), (6, 6, 0.3)] {
            let m = generate_bipartite_model(n0, n1, p, ParamRange::default(), &mut rng).unwrap();
            for beta in [0.0, 0.5, 2.0] {
                close(
                    &exact_solve(&m, beta).unwrap(),
                    &exact_solve_bipartite(&m, beta).unwrap(),
                    1e-10,
                );
            }
        }
    }

    #[test]
    fn bipartite_requires_layers() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(exact_solve_bipartite(&m, 1.0), Err(Error::MissingLayers)));
    }

    #[test]
    fn exact_distribution_normalised_and_consistent() {
        let m = generate_random_graph_model(7, 0.5, ParamRange::default(), &mut seeded(10)).unwrap();
        let d = ExactDistribution::new(&m, 1.1).unwrap();
        let s = exact_solve(&m, 1.1).unwrap();
        assert_abs_diff_eq!(d.probabilities().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.log_partition(), s.log_partition, epsilon = 1e-12);
        let mut rng = seeded(1);
        let draws = 20_000;
        let mut mean0 = 0.0;
        for _ in 0..draws {
            mean0 += f64::from(d.sample(&mut rng).as_slice()[0]);
        }
        mean0 /= draws as f64;
        let sd = ((1.0 - s.magnetization[0].powi(2)) / draws as f64).sqrt();
        assert!((mean0 - s.magnetization[0]).abs() < 4.0 * sd);
    }
}
