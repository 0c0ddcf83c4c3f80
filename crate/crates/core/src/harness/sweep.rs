use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;
use super::stats;
use crate::ais::run_ais;
use crate::error::Result;
use crate::estimators::{mae, mci_moments, smci1_moments, weighted_moments, Method, MomentReport, WeightedMode};
use crate::model::IsingModel;
use crate::rng::{derive_seed_path, seeded};
use crate::samplers::{annealed_sample_set, parallel_tempering_sample_set, AnnealingSchedule};

/// Stream roles under a trial's seed path.
const ROLE_MODEL: u64 = 0;
const ROLE_ANNEALED: u64 = 1;
const ROLE_AIS: u64 = 2;
const ROLE_PT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta: f64,
    pub n_samples: usize,
    pub anneal_steps: usize,
}

/// Aggregate of one (grid point, method) pair over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub point: GridPoint,
    pub method: Method,
    pub trials: usize,
    pub mae_mean: f64,
    /// `sd / sqrt(trials)`.
    pub mae_stderr: f64,
    /// Per-trial MAE in trial order; entries align across methods (paired design).
    pub trial_mae: Vec<f64>,
}

/// Mean wall-clock per trial and grid point, split into phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub sampling_ms: f64,
    pub weights_ms: f64,
    pub expectations_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    pub rng: String,
    pub version: String,
    pub cells: Vec<SweepCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<MethodTiming>>,
}

impl SweepResult {
    pub fn cell(&self, point_index: usize, method: Method) -> Option<&SweepCell> {
        let per_point = self.spec.methods.len();
        let base = point_index * per_point;
        self.cells
            .get(base..base + per_point)?
            .iter()
            .find(|c| c.method == method)
    }

    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(move |c| c.method == method)
    }
}

impl ExperimentSpec {
    /// Grid points in `beta`-major, then `N`, then `K` order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &beta in &self.betas {
            for &n_samples in &self.sample_sizes {
                for &anneal_steps in &self.anneal_steps {
                    points.push(GridPoint {
                        beta,
                        n_samples,
                        anneal_steps,
                    });
                }
            }
        }
        points
    }
}

#[derive(Default, Clone, Copy)]
struct Phases {
    sampling: Duration,
    weights: Duration,
    expectations: Duration,
}

struct TrialRecord {
    /// `mae[point][method]`.
    mae: Vec<Vec<f64>>,
    phases: Vec<Phases>,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed();
    out
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialRecord> {
    let trial = trial as u64;
    let mut model_rng = seeded(derive_seed_path(spec.seed, &[trial, ROLE_MODEL]));
    let model: IsingModel = spec.family.generate(&mut model_rng)?;
    let kernel = spec.kernel();
    let wants = |m: Method| spec.methods.contains(&m);
    let mut phases = vec![Phases::default(); spec.methods.len()];
    let slot = |m: Method| spec.methods.iter().position(|x| *x == m).expect("requested");
    let mut mae_rows = Vec::new();

    for (b_idx, &beta) in spec.betas.iter().enumerate() {
        let exact = spec.family.exact(&model, beta)?;
        for (n_idx, &n_samples) in spec.sample_sizes.iter().enumerate() {
            for (k_idx, &steps) in spec.anneal_steps.iter().enumerate() {
                let point = [trial, b_idx as u64, n_idx as u64, k_idx as u64];
                let stream = |role: u64| {
                    let mut path = point.to_vec();
                    path.push(role);
                    derive_seed_path(spec.seed, &path)
                };
                let schedule = AnnealingSchedule::linear(steps)?;
                let mut reports: Vec<Option<MomentReport>> = vec![None; spec.methods.len()];

                if wants(Method::Mci) || wants(Method::Smci) {
                    let mut sampling = Duration::ZERO;
                    let set = timed(&mut sampling, || {
                        annealed_sample_set(&model, beta, &schedule, kernel, n_samples, stream(ROLE_ANNEALED))
                    })?;
                    for (m, est) in [(Method::Mci, false), (Method::Smci, true)] {
                        if wants(m) {
                            let p = &mut phases[slot(m)];
                            p.sampling += sampling;
                            reports[slot(m)] = Some(timed(&mut p.expectations, || {
                                if est {
                                    smci1_moments(&model, beta, &set)
                                } else {
                                    mci_moments(&model, &set)
                                }
                            })?);
                        }
                    }
                }
                if wants(Method::Ais) || wants(Method::AisSmci) {
                    let mut sampling = Duration::ZERO;
                    let ws = timed(&mut sampling, || {
                        run_ais(&model, beta, &schedule, kernel, n_samples, stream(ROLE_AIS))
                    })?;
                    for (m, mode) in [(Method::Ais, WeightedMode::Mci), (Method::AisSmci, WeightedMode::Smci1)] {
                        if wants(m) {
                            let p = &mut phases[slot(m)];
                            // Weight evaluation is interleaved with sampling here; the
                            // separate split is measured by `time_phases`.
                            p.sampling += sampling;
                            reports[slot(m)] = Some(timed(&mut p.expectations, || {
                                weighted_moments(&model, beta, &ws, mode)
                            })?);
                        }
                    }
                }
                if wants(Method::PtSmci) {
                    let p = &mut phases[slot(Method::PtSmci)];
                    let set = timed(&mut p.sampling, || {
                        parallel_tempering_sample_set(&model, beta, &spec.pt, kernel, n_samples, stream(ROLE_PT))
                    })?;
                    reports[slot(Method::PtSmci)] =
                        Some(timed(&mut p.expectations, || smci1_moments(&model, beta, &set))?);
                }
                if wants(Method::Exact) {
                    reports[slot(Method::Exact)] = Some(MomentReport::from_exact(&exact));
                }

                let row = reports
                    .iter()
                    .map(|r| mae(&exact, r.as_ref().expect("every method filled")).map(|m| m.mae))
                    .collect::<Result<Vec<_>>>()?;
                mae_rows.push(row);
            }
        }
    }
    Ok(TrialRecord { mae: mae_rows, phases })
}

/// Runs every trial of the experiment and aggregates per grid point and method.
///
/// Trials run in parallel; each is isolated by its own seed path and the
/// reduction runs in trial order, so the result is independent of the
/// worker count.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate(true)?;
    let grid = spec.grid();
    let records = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(grid.len() * spec.methods.len());
    for (p_idx, point) in grid.iter().enumerate() {
        for (m_idx, &method) in spec.methods.iter().enumerate() {
            let trial_mae: Vec<f64> = records.iter().map(|r| r.mae[p_idx][m_idx]).collect();
            cells.push(SweepCell {
                point: *point,
                method,
                trials: spec.trials,
                mae_mean: stats::mean(&trial_mae),
                mae_stderr: stats::std_error(&trial_mae),
                trial_mae,
            });
        }
    }

    let timings = spec.record_timings.then(|| {
        let per = (spec.trials * grid.len()) as f64;
        let ms = |d: Duration| d.as_secs_f64() * 1e3 / per;
        spec.methods
            .iter()
            .enumerate()
            .map(|(m_idx, &method)| {
                let total = records.iter().fold(Phases::default(), |mut acc, r| {
                    acc.sampling += r.phases[m_idx].sampling;
                    acc.weights += r.phases[m_idx].weights;
                    acc.expectations += r.phases[m_idx].expectations;
                    acc
                });
                MethodTiming {
                    method,
                    sampling_ms: ms(total.sampling),
                    weights_ms: ms(total.weights),
                    expectations_ms: ms(total.expectations),
                }
            })
            .collect()
    });

    Ok(SweepResult {
        spec: spec.clone(),
        rng: crate::rng::RNG_NAME.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        cells,
        timings,
    })
}
