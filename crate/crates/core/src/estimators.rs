//! Moment estimators: plain Monte Carlo integration, first-order spatial Monte
//! Carlo integration (1-SMCI), their importance-weighted forms and the
//! covariance MAE metric.
//!
//! 1-SMCI replaces each sample's `x_i` by its conditional mean given the
//! sampled neighbours, `tanh(phi_i)`, and each `x_i x_j` on an edge by the
//! conditional pair mean given the neighbours of `{i, j}`,
//! `tanh(atanh(tanh(psi_ij) tanh(psi_ji)) + beta J_ij)` with
//! `psi_ij = phi_i - beta J_ij s_j`.

use serde::{Deserialize, Serialize};

use crate::ais::{ais_normalizer, WeightedSampleSet};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::model::{IsingModel, SpinConfig};
use crate::numeric::normalized_weights;
use crate::samplers::SampleSet;

/// Products of tanh values are clamped to `[-1 + ATANH_CLAMP, 1 - ATANH_CLAMP]`
/// before `atanh`; they reach ±1 only for infinite fields.
pub const ATANH_CLAMP: f64 = 1e-15;

/// Estimation method tags used in reports, configs and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mci")]
    Mci,
    #[serde(rename = "smci")]
    Smci,
    #[serde(rename = "ais")]
    Ais,
    #[serde(rename = "ais+smci")]
    AisSmci,
    #[serde(rename = "pt+smci")]
    PtSmci,
    #[serde(rename = "exact")]
    Exact,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mci,
        Method::Smci,
        Method::Ais,
        Method::AisSmci,
        Method::PtSmci,
        Method::Exact,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mci => "mci",
            Method::Smci => "smci",
            Method::Ais => "ais",
            Method::AisSmci => "ais+smci",
            Method::PtSmci => "pt+smci",
            Method::Exact => "exact",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Per-sample summand evaluated by a weighted estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightedMode {
    Mci,
    Smci1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub method: Method,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub magnetization: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    pub pair_moment: Vec<f64>,
    pub covariance: Vec<f64>,
}

impl MomentReport {
    fn assemble(
        model: &IsingModel,
        method: Method,
        n_samples: usize,
        ess: Option<f64>,
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
            method,
            n_samples,
            ess,
            magnetization,
            edges,
            pair_moment,
            covariance,
        }
    }

    /// Report of the exact moments, tagged [`Method::Exact`].
    pub fn from_exact(exact: &ExactSolution) -> Self {
        Self {
            method: Method::Exact,
            n_samples: 0,
            ess: None,
            magnetization: exact.magnetization.clone(),
            edges: exact.edges.clone(),
            pair_moment: exact.pair_moment.clone(),
            covariance: exact.covariance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeResult {
    pub mae: f64,
    pub per_edge_abs_err: Vec<f64>,
}

fn check_samples(model: &IsingModel, samples: &[SpinConfig]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if let Some(x) = samples.iter().find(|x| x.len() != model.n()) {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Conditional pair mean of one edge for one sample.
#[inline]
fn smci_pair_term(beta: f64, coupling: f64, phi_i: f64, phi_j: f64, s_i: i8, s_j: i8) -> f64 {
    let bj = beta * coupling;
    let psi_ij = phi_i - bj * f64::from(s_j);
    let psi_ji = phi_j - bj * f64::from(s_i);
    let prod = (psi_ij.tanh() * psi_ji.tanh()).clamp(-1.0 + ATANH_CLAMP, 1.0 - ATANH_CLAMP);
    (prod.atanh() + bj).tanh()
}

/// Fixed-order accumulation of per-sample summands. `weights`, when given,
/// must be normalised; otherwise sums are divided by N.
fn accumulate(
    model: &IsingModel,
    beta: f64,
    samples: &[SpinConfig],
    weights: Option<&[f64]>,
    mode: WeightedMode,
) -> (Vec<f64>, Vec<f64>) {
    let n = model.n();
    let edges = model.edges();
    let mut mag = vec![0.0; n];
    let mut pair = vec![0.0; edges.len()];
    let mut phi = vec![0.0; n];
    for (mu, x) in samples.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[mu]);
        if w == 0.0 {
            continue;
        }
        let s = x.as_slice();
        match mode {
            WeightedMode::Mci => {
                for (m, &si) in mag.iter_mut().zip(s) {
                    *m += w * f64::from(si);
                }
                for (c, e) in pair.iter_mut().zip(edges) {
                    *c += w * f64::from(s[e.i] * s[e.j]);
                }
            }
            WeightedMode::Smci1 => {
                for (i, p) in phi.iter_mut().enumerate() {
                    *p = beta * model.raw_field(i, s);
                }
                for (m, p) in mag.iter_mut().zip(&phi) {
                    *m += w * p.tanh();
                }
                for (c, e) in pair.iter_mut().zip(edges) {
                    *c += w * smci_pair_term(beta, e.coupling, phi[e.i], phi[e.j], s[e.i], s[e.j]);
                }
            }
        }
    }
    if weights.is_none() {
        let inv = samples.len() as f64;
        mag.iter_mut().for_each(|v| *v /= inv);
        pair.iter_mut().for_each(|v| *v /= inv);
    }
    (mag, pair)
}

/// Sample averages of `x_i` and `x_i x_j`.
pub fn mci_moments(model: &IsingModel, s: &SampleSet) -> Result<MomentReport> {
    check_samples(model, &s.samples)?;
    let (mag, pair) = accumulate(model, 0.0, &s.samples, None, WeightedMode::Mci);
    Ok(MomentReport::assemble(model, Method::Mci, s.len(), None, mag, pair))
}

/// `(1/N) sum_mu tanh(phi_i(mu))`.
pub fn smci1_magnetization(model: &IsingModel, beta: f64, s: &SampleSet, i: usize) -> Result<f64> {
    check_samples(model, &s.samples)?;
    if i >= model.n() {
        return Err(Error::VertexOutOfRange { index: i, n: model.n() });
    }
    let total: f64 = s
        .samples
        .iter()
        .map(|x| (beta * model.raw_field(i, x.as_slice())).tanh())
        .sum();
    Ok(total / s.len() as f64)
}

/// 1-SMCI estimate of `<x_i x_j>` for an edge.
pub fn smci1_pair_moment(model: &IsingModel, beta: f64, s: &SampleSet, (i, j): (usize, usize)) -> Result<f64> {
    check_samples(model, &s.samples)?;
    let coupling = model.coupling(i, j).ok_or(Error::NotAnEdge(i, j))?;
    let total: f64 = s
        .samples
        .iter()
        .map(|x| {
            let x = x.as_slice();
            let phi_i = beta * model.raw_field(i, x);
            let phi_j = beta * model.raw_field(j, x);
            smci_pair_term(beta, coupling, phi_i, phi_j, x[i], x[j])
        })
        .sum();
    Ok(total / s.len() as f64)
}

/// 1-SMCI magnetisations and edge pair moments, `O(N |E|)`.
pub fn smci1_moments(model: &IsingModel, beta: f64, s: &SampleSet) -> Result<MomentReport> {
    check_samples(model, &s.samples)?;
    let (mag, pair) = accumulate(model, beta, &s.samples, None, WeightedMode::Smci1);
    Ok(MomentReport::assemble(model, Method::Smci, s.len(), None, mag, pair))
}

/// Importance-weighted estimates `(1/Omega) sum_mu w_mu f(s_mu)`. With
/// [`WeightedMode::Smci1`] this is the AIS-weighted 1-SMCI estimator.
pub fn weighted_moments(
    model: &IsingModel,
    beta: f64,
    ws: &WeightedSampleSet,
    mode: WeightedMode,
) -> Result<MomentReport> {
    check_samples(model, &ws.samples)?;
    let weights = normalized_weights(&ws.log_weights).ok_or(Error::DegenerateWeights)?;
    let ess = ais_normalizer(ws)?.ess;
    let (mag, pair) = accumulate(model, beta, &ws.samples, Some(&weights), mode);
    let method = match mode {
        WeightedMode::Mci => Method::Ais,
        WeightedMode::Smci1 => Method::AisSmci,
    };
    Ok(MomentReport::assemble(model, method, ws.len(), Some(ess), mag, pair))
}

/// Mean absolute error of the edge covariances. An edgeless model scores 0.
pub fn mae(exact: &ExactSolution, approx: &MomentReport) -> Result<MaeResult> {
    if exact.edges != approx.edges {
        return Err(Error::EdgeSetMismatch);
    }
    let per_edge_abs_err: Vec<f64> = exact
        .covariance
        .iter()
        .zip(&approx.covariance)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let mae = if per_edge_abs_err.is_empty() {
        0.0
    } else {
        per_edge_abs_err.iter().sum::<f64>() / per_edge_abs_err.len() as f64
    };
    Ok(MaeResult { mae, per_edge_abs_err })
}

/// Unbiased across-run variance of every reported quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorVariance {
    pub magnetization: Vec<f64>,
    pub pair_moment: Vec<f64>,
    pub covariance: Vec<f64>,
}

fn column_variance(runs: &[MomentReport], get: impl Fn(&MomentReport) -> &[f64]) -> Vec<f64> {
    let len = get(&runs[0]).len();
    let r = runs.len() as f64;
    (0..len)
        .map(|k| {
            let mean = runs.iter().map(|run| get(run)[k]).sum::<f64>() / r;
            runs.iter().map(|run| (get(run)[k] - mean).powi(2)).sum::<f64>() / (r - 1.0)
        })
        .collect()
}

pub fn empirical_estimator_variance(runs: &[MomentReport]) -> Result<EstimatorVariance> {
    if runs.len() < 2 {
        return Err(Error::InvalidParameter("variance needs at least two runs".into()));
    }
    let first = &runs[0];
    if runs
        .iter()
        .any(|r| r.edges != first.edges || r.magnetization.len() != first.magnetization.len())
    {
        return Err(Error::EdgeSetMismatch);
    }
    Ok(EstimatorVariance {
        magnetization: column_variance(runs, |r| &r.magnetization),
        pair_moment: column_variance(runs, |r| &r.pair_moment),
        covariance: column_variance(runs, |r| &r.covariance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_solve;
    use crate::generators::{generate_random_graph_model, ParamRange};
    use crate::rng::seeded;
    use crate::samplers::{exact_sample_set, SampleMeta, SamplerKind};
    use approx::assert_abs_diff_eq;

    fn meta(n: usize) -> SampleMeta {
        SampleMeta {
            sampler: SamplerKind::Exact,
            seed: 0,
            model_hash: 0,
            beta_target: 1.0,
            n_samples: n,
            kernel: None,
            steps: None,
            schedule: None,
            pt: None,
            rng: String::new(),
        }
    }

    fn set(rows: Vec<Vec<i8>>) -> SampleSet {
        let n = rows.len();
        SampleSet {
            samples: rows.into_iter().map(|r| SpinConfig::new(r).unwrap()).collect(),
            meta: meta(n),
        }
    }

    #[test]
    fn mci_direct_average() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 0.5)]).unwrap();
        let r = mci_moments(&m, &set(vec![vec![1, 1], vec![-1, -1]])).unwrap();
        assert_eq!(r.magnetization, vec![0.0, 0.0]);
        assert_eq!(r.pair_moment, vec![1.0]);
        assert_eq!(r.covariance, vec![1.0]);

        let r = mci_moments(&m, &set(vec![vec![1, -1]; 5])).unwrap();
        assert_eq!(r.pair_moment, vec![-1.0]);
        assert_eq!(r.covariance, vec![0.0]);
    }

    #[test]
    fn empty_sets_rejected() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 0.5)]).unwrap();
        let empty = set(vec![]);
        assert!(matches!(mci_moments(&m, &empty), Err(Error::EmptySampleSet)));
        assert!(matches!(smci1_moments(&m, 1.0, &empty), Err(Error::EmptySampleSet)));
    }

    #[test]
    fn smci_isolated_vertex_is_exact() {
        let m = IsingModel::new(3, vec![0.4, 0.1, -0.2], vec![(1, 2, 0.7)]).unwrap();
        let s = set(vec![vec![1, -1, 1], vec![-1, 1, 1], vec![-1, -1, -1]]);
        assert_eq!(smci1_magnetization(&m, 1.3, &s, 0).unwrap(), (1.3f64 * 0.4).tanh());
    }

    #[test]
    fn smci_single_neighbour() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        let s = set(vec![vec![-1, 1]; 4]);
        assert_abs_diff_eq!(
            smci1_magnetization(&m, 1.0, &s, 0).unwrap(),
            1f64.tanh(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn smci_isolated_edge_is_exact() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        for rows in [vec![vec![1, 1]], vec![vec![-1, 1], vec![1, 1], vec![-1, -1]]] {
            let s = set(rows);
            assert_abs_diff_eq!(
                smci1_pair_moment(&m, 1.0, &s, (0, 1)).unwrap(),
                1f64.tanh(),
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                smci1_pair_moment(&m, 1.0, &s, (1, 0)).unwrap(),
                1f64.tanh(),
                epsilon = 1e-15
            );
        }
        // With biases the isolated edge is still summed out exactly.
        let m = IsingModel::new(2, vec![0.3, -0.6], vec![(0, 1, 0.8)]).unwrap();
        let exact = exact_solve(&m, 1.4).unwrap();
        let r = smci1_moments(&m, 1.4, &set(vec![vec![1, -1], vec![1, 1]])).unwrap();
        assert_abs_diff_eq!(r.pair_moment[0], exact.pair_moment[0], epsilon = 1e-14);
    }

    #[test]
    fn zero_coupling_edge_drops_additive_term() {
        let m = IsingModel::new(
            4,
            vec![0.2, -0.1, 0.3, 0.5],
            vec![(0, 1, 0.0), (0, 2, 0.6), (1, 3, -0.9)],
        )
        .unwrap();
        let s = exact_sample_set(&m, 1.2, 50, 3).unwrap();
        let got = smci1_pair_moment(&m, 1.2, &s, (0, 1)).unwrap();
        let expected: f64 = s
            .samples
            .iter()
            .map(|x| {
                let x = x.as_slice();
                (1.2 * m.raw_field(0, x)).tanh() * (1.2 * m.raw_field(1, x)).tanh()
            })
            .sum::<f64>()
            / 50.0;
        assert_abs_diff_eq!(got, expected, epsilon = 1e-14);
    }

    #[test]
    fn pair_moment_requires_edge() {
        let m = IsingModel::new(3, vec![0.0; 3], vec![(0, 1, 1.0)]).unwrap();
        let s = set(vec![vec![1, 1, 1]]);
        assert!(matches!(
            smci1_pair_moment(&m, 1.0, &s, (0, 2)),
            Err(Error::NotAnEdge(0, 2))
        ));
    }

    #[test]
    fn tanh_estimates_strictly_inside_unit_interval() {
        let m = generate_random_graph_model(10, 0.6, ParamRange::symmetric(50.0), &mut seeded(1)).unwrap();
        let s = exact_sample_set(&m, 0.01, 30, 2).unwrap();
        let r = smci1_moments(&m, 10.0, &s).unwrap();
        assert!(r
            .magnetization
            .iter()
            .chain(&r.pair_moment)
            .all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn uniform_weights_reproduce_unweighted() {
        use crate::samplers::SamplerKind;
        let m = generate_random_graph_model(12, 0.4, ParamRange::default(), &mut seeded(4)).unwrap();
        let s = exact_sample_set(&m, 0.9, 300, 5).unwrap();
        let ws = WeightedSampleSet::new(
            s.samples.clone(),
            vec![-3.25; 300],
            SampleMeta {
                sampler: SamplerKind::Ais,
                ..s.meta.clone()
            },
        )
        .unwrap();
        let pairs = [
            (
                mci_moments(&m, &s).unwrap(),
                weighted_moments(&m, 0.9, &ws, WeightedMode::Mci).unwrap(),
            ),
            (
                smci1_moments(&m, 0.9, &s).unwrap(),
                weighted_moments(&m, 0.9, &ws, WeightedMode::Smci1).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            for (x, y) in a
                .magnetization
                .iter()
                .zip(&b.magnetization)
                .chain(a.pair_moment.iter().zip(&b.pair_moment))
            {
                assert_abs_diff_eq!(x, y, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(b.ess.unwrap(), 300.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_surviving_weight_gives_that_sample() {
        let m = generate_random_graph_model(6, 0.5, ParamRange::default(), &mut seeded(6)).unwrap();
        let s = exact_sample_set(&m, 1.0, 4, 7).unwrap();
        let ws = WeightedSampleSet::new(
            s.samples.clone(),
            vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY],
            s.meta.clone(),
        )
        .unwrap();
        let r = weighted_moments(&m, 1.0, &ws, WeightedMode::Smci1).unwrap();
        let single = SampleSet {
            samples: vec![s.samples[1].clone()],
            meta: s.meta.clone(),
        };
        assert_eq!(r.magnetization, smci1_moments(&m, 1.0, &single).unwrap().magnetization);
        let r = weighted_moments(&m, 1.0, &ws, WeightedMode::Mci).unwrap();
        let x = s.samples[1].as_slice();
        assert!(r.magnetization.iter().zip(x).all(|(a, &b)| *a == f64::from(b)));
    }

    #[test]
    fn all_zero_weights_are_degenerate() {
        let m = IsingModel::new(1, vec![0.0], vec![]).unwrap();
        let ws = WeightedSampleSet::new(vec![SpinConfig::ones(1)], vec![f64::NEG_INFINITY], meta(1)).unwrap();
        assert!(matches!(
            weighted_moments(&m, 1.0, &ws, WeightedMode::Mci),
            Err(Error::DegenerateWeights)
        ));
    }

    #[test]
    fn mae_examples() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        let exact = exact_solve(&m, 1.0).unwrap();
        let same = MomentReport::from_exact(&exact);
        assert_eq!(mae(&exact, &same).unwrap().mae, 0.0);

        let mut e = exact.clone();
        e.covariance = vec![0.5];
        let mut a = same.clone();
        a.covariance = vec![0.3];
        assert_abs_diff_eq!(mae(&e, &a).unwrap().mae, 0.2, epsilon = 1e-15);

        let other = IsingModel::new(3, vec![0.0; 3], vec![(0, 2, 1.0)]).unwrap();
        let r = mci_moments(&other, &set(vec![vec![1, 1, 1]])).unwrap();
        assert!(matches!(mae(&exact, &r), Err(Error::EdgeSetMismatch)));
    }

    #[test]
    fn mae_is_mean_of_per_edge_errors() {
        let m = generate_random_graph_model(10, 0.5, ParamRange::default(), &mut seeded(9)).unwrap();
        let exact = exact_solve(&m, 1.0).unwrap();
        let r = mci_moments(&m, &exact_sample_set(&m, 1.0, 40, 1).unwrap()).unwrap();
        let res = mae(&exact, &r).unwrap();
        let mean = res.per_edge_abs_err.iter().sum::<f64>() / res.per_edge_abs_err.len() as f64;
        assert_abs_diff_eq!(res.mae, mean, epsilon = 1e-15);
    }

    #[test]
    fn variance_examples() {
        let m = IsingModel::new(2, vec![0.0; 2], vec![(0, 1, 1.0)]).unwrap();
        let r = mci_moments(&m, &set(vec![vec![1, 1], vec![-1, 1]])).unwrap();
        let v = empirical_estimator_variance(&[r.clone(), r.clone(), r.clone()]).unwrap();
        assert!(v.magnetization.iter().chain(&v.pair_moment).all(|&x| x == 0.0));

        let mut r2 = r.clone();
        r2.magnetization[0] += 0.3;
        let v = empirical_estimator_variance(&[r.clone(), r2]).unwrap();
        assert_abs_diff_eq!(v.magnetization[0], 0.09 / 2.0, epsilon = 1e-15);
        assert_eq!(v.magnetization[1], 0.0);

        assert!(empirical_estimator_variance(&[r]).is_err());
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.tag()));
        }
        assert!(matches!("foo".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }
}
