//! Annealed importance sampling with a uniform initial distribution.
//!
//! A chain starts at `x(1) ~ uniform`, then for `k = 2..K` applies the kernel
//! that leaves `P_{k-1}` invariant (inverse temperature `beta * b_{k-1}`).
//! Its log weight is
//! `ln w = -beta * sum_{k=1..K} (b_k - b_{k-1}) E(x(k))`,
//! where `x(k)` is the state before the transition toward `b_k`. The
//! endpoint `x(K)` is the sample.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{IsingModel, SpinConfig};
use crate::numeric::log_sum_exp;
use crate::rng::{stream_rng, McRng};
use crate::samplers::{validate_target_beta, AnnealingSchedule, Kernel, SampleMeta, SamplerKind};

/// AIS endpoints with their log importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSampleSet {
    pub samples: Vec<SpinConfig>,
    pub log_weights: Vec<f64>,
    pub meta: SampleMeta,
}

impl WeightedSampleSet {
    pub fn new(samples: Vec<SpinConfig>, log_weights: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if samples.len() != log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                actual: log_weights.len(),
            });
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self {
            samples,
            log_weights,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AisDiagnostics {
    /// `ln Omega = ln sum_mu w_mu`.
    pub log_omega: f64,
    /// `(sum w)^2 / sum w^2`.
    pub ess: f64,
    pub max_weight_share: f64,
}

/// Wall-clock split of one AIS run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AisPhaseTimes {
    pub sampling: Duration,
    pub weights: Duration,
}

trait StepClock {
    fn lap(&mut self) -> Option<Instant>;
    fn add_sampling(&mut self, since: Option<Instant>);
    fn add_weights(&mut self, since: Option<Instant>);
}

struct NoClock;

impl StepClock for NoClock {
    #[inline(always)]
    fn lap(&mut self) -> Option<Instant> {
        None
    }
    #[inline(always)]
    fn add_sampling(&mut self, _: Option<Instant>) {}
    #[inline(always)]
    fn add_weights(&mut self, _: Option<Instant>) {}
}

impl StepClock for AisPhaseTimes {
    fn lap(&mut self) -> Option<Instant> {
        Some(Instant::now())
    }
    fn add_sampling(&mut self, since: Option<Instant>) {
        if let Some(t) = since {
            self.sampling += t.elapsed();
        }
    }
    fn add_weights(&mut self, since: Option<Instant>) {
        if let Some(t) = since {
            self.weights += t.elapsed();
        }
    }
}

fn chain<C: StepClock>(
    model: &IsingModel,
    beta: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    rng: &mut McRng,
    clock: &mut C,
    mut record: Option<&mut Vec<SpinConfig>>,
) -> (SpinConfig, f64) {
    let b = schedule.betas();
    let t = clock.lap();
    let mut x = SpinConfig::uniform(model.n(), rng);
    clock.add_sampling(t);
    let mut log_weight = 0.0;
    for k in 1..b.len() {
        if k >= 2 {
            let t = clock.lap();
            kernel.apply(model, beta * b[k - 1], x.as_mut_slice(), rng);
            clock.add_sampling(t);
        }
        if let Some(trajectory) = record.as_deref_mut() {
            trajectory.push(x.clone());
        }
        let t = clock.lap();
        log_weight -= beta * (b[k] - b[k - 1]) * model.energy_of(x.as_slice());
        clock.add_weights(t);
    }
    (x, log_weight)
}

fn check_inputs(model: &IsingModel, beta: f64, kernel: Kernel, n_samples: usize) -> Result<()> {
    validate_target_beta(beta)?;
    kernel.validate(model)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok(())
}

fn meta(
    model: &IsingModel,
    beta: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    n: usize,
    seed: u64,
) -> SampleMeta {
    SampleMeta {
        sampler: SamplerKind::Ais,
        seed,
        model_hash: model.content_hash(),
        beta_target: beta,
        n_samples: n,
        kernel: Some(kernel),
        steps: Some(schedule.steps()),
        schedule: Some(schedule.descriptor()),
        pt: None,
        rng: crate::rng::RNG_NAME.into(),
    }
}

/// Runs `n_samples` independent AIS chains; chain `mu` uses stream `mu` of `seed`.
pub fn run_ais(
    model: &IsingModel,
    beta_target: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    n_samples: usize,
    seed: u64,
) -> Result<WeightedSampleSet> {
    check_inputs(model, beta_target, kernel, n_samples)?;
    let (samples, log_weights): (Vec<_>, Vec<_>) = (0..n_samples)
        .into_par_iter()
        .map(|mu| {
            let mut rng = stream_rng(seed, mu as u64);
            chain(model, beta_target, schedule, kernel, &mut rng, &mut NoClock, None)
        })
        .unzip();
    Ok(WeightedSampleSet {
        samples,
        log_weights,
        meta: meta(model, beta_target, schedule, kernel, n_samples, seed),
    })
}

/// Sequential AIS run that times kernel sweeps and energy evaluations
/// separately. Produces the same output as [`run_ais`].
pub fn run_ais_timed(
    model: &IsingModel,
    beta_target: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    n_samples: usize,
    seed: u64,
) -> Result<(WeightedSampleSet, AisPhaseTimes)> {
    check_inputs(model, beta_target, kernel, n_samples)?;
    let mut times = AisPhaseTimes::default();
    let mut samples = Vec::with_capacity(n_samples);
    let mut log_weights = Vec::with_capacity(n_samples);
    for mu in 0..n_samples {
        let mut rng = stream_rng(seed, mu as u64);
        let (x, lw) = chain(model, beta_target, schedule, kernel, &mut rng, &mut times, None);
        samples.push(x);
        log_weights.push(lw);
    }
    let ws = WeightedSampleSet {
        samples,
        log_weights,
        meta: meta(model, beta_target, schedule, kernel, n_samples, seed),
    };
    Ok((ws, times))
}

/// One chain with its full state sequence `x(1), ..., x(K)`.
#[derive(Debug, Clone)]
pub struct AisTrajectory {
    pub states: Vec<SpinConfig>,
    pub log_weight: f64,
}

/// Runs a single chain on stream `chain_index` of `seed` and keeps every state.
pub fn ais_trajectory(
    model: &IsingModel,
    beta_target: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    seed: u64,
    chain_index: u64,
) -> Result<AisTrajectory> {
    check_inputs(model, beta_target, kernel, 1)?;
    let mut rng = stream_rng(seed, chain_index);
    let mut states = Vec::with_capacity(schedule.steps());
    let (_, log_weight) = chain(
        model,
        beta_target,
        schedule,
        kernel,
        &mut rng,
        &mut NoClock,
        Some(&mut states),
    );
    Ok(AisTrajectory { states, log_weight })
}

/// General AIS weight `ln prod_k P_k'(x(k)) / P_{k-1}'(x(k))` for the geometric
/// path `P_k' = P_0'^(1 - b_k) * exp(-beta E)^(b_k)`, given the log of the
/// unnormalised initial density.
pub fn general_log_weight(
    model: &IsingModel,
    beta_target: f64,
    schedule: &AnnealingSchedule,
    states: &[SpinConfig],
    log_initial: impl Fn(&SpinConfig) -> f64,
) -> Result<f64> {
    let b = schedule.betas();
    if states.len() != schedule.steps() {
        return Err(Error::DimensionMismatch {
            expected: schedule.steps(),
            actual: states.len(),
        });
    }
    let log_relative = |k: usize, x: &SpinConfig| -> Result<f64> {
        Ok((1.0 - b[k]) * log_initial(x) + b[k] * (-beta_target * model.energy(x)?))
    };
    let mut total = 0.0;
    for (k, x) in (1..b.len()).zip(states) {
        total += log_relative(k, x)? - log_relative(k - 1, x)?;
    }
    Ok(total)
}

/// `ln Omega`, effective sample size and largest normalised weight.
pub fn ais_normalizer(ws: &WeightedSampleSet) -> Result<AisDiagnostics> {
    if ws.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let log_omega = log_sum_exp(&ws.log_weights);
    if !log_omega.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let doubled: Vec<f64> = ws.log_weights.iter().map(|w| 2.0 * w).collect();
    let ess = (2.0 * log_omega - log_sum_exp(&doubled)).exp();
    let max = ws.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AisDiagnostics {
        log_omega,
        ess,
        max_weight_share: (max - log_omega).exp(),
    })
}

/// `F ≈ -(1/beta) ln Z_0 - (1/beta) ln(Omega / N)` with `Z_0 = 2^n`.
pub fn free_energy_estimate(ws: &WeightedSampleSet, beta_target: f64, n: usize) -> Result<f64> {
    if !(beta_target > 0.0 && beta_target.is_finite()) {
        return Err(Error::Domain(format!(
            "free energy estimate needs beta > 0, got {beta_target}"
        )));
    }
    let diag = ais_normalizer(ws)?;
    let ln_z0 = n as f64 * std::f64::consts::LN_2;
    Ok(-(ln_z0 + diag.log_omega - (ws.len() as f64).ln()) / beta_target)
}
