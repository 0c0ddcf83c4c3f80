//! Transition kernels and sample-set generators.
//!
//! Each chain (or replica group) draws from its own stream derived from the
//! master seed and the chain index, so output is identical whatever the
//! thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{randomize, IsingModel, SpinConfig};
use crate::rng::{stream_rng, McRng};

/// Inverse-temperature ladder `0 = b_0 < b_1 < ... < b_K = 1`, scaled by the
/// target beta at use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AnnealingSchedule {
    betas: Vec<f64>,
}

impl AnnealingSchedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(Error::InvalidParameter("schedule needs at least two points".into()));
        }
        if betas[0] != 0.0 || *betas.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter("schedule must start at 0 and end at 1".into()));
        }
        if betas
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidParameter("schedule must be strictly increasing".into()));
        }
        Ok(Self { betas })
    }

    /// `b_k = k / K`.
    pub fn linear(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("schedule needs K >= 1".into()));
        }
        Self::new((0..=steps).map(|k| k as f64 / steps as f64).collect())
    }

    /// K, the number of annealing steps.
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn descriptor(&self) -> String {
        let linear = self
            .betas
            .iter()
            .enumerate()
            .all(|(k, &b)| b == k as f64 / self.steps() as f64);
        if linear {
            format!("linear(K={})", self.steps())
        } else {
            format!("custom(K={})", self.steps())
        }
    }
}

impl TryFrom<Vec<f64>> for AnnealingSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AnnealingSchedule> for Vec<f64> {
    fn from(s: AnnealingSchedule) -> Self {
        s.betas
    }
}

/// Transition kernel used along an annealing path or inside a replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Sequential single-site Gibbs sweep over vertices `0..n`.
    Gibbs,
    /// Layer-wise blocked Gibbs for two-layer models.
    Blocked,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gibbs => "gibbs",
            Kernel::Blocked => "blocked",
        }
    }

    pub(crate) fn validate(self, model: &IsingModel) -> Result<()> {
        if self == Kernel::Blocked && model.layers().is_none() {
            return Err(Error::MissingLayers);
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply<R: Rng + ?Sized>(self, model: &IsingModel, beta: f64, x: &mut [i8], rng: &mut R) {
        match self {
            Kernel::Gibbs => sweep_sites(model, beta, x, 0..model.n(), rng),
            Kernel::Blocked => {
                let layers = model.layers().expect("validated");
                sweep_sites(model, beta, x, layers.first(), rng);
                sweep_sites(model, beta, x, layers.second(), rng);
            }
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gibbs" => Ok(Kernel::Gibbs),
            "blocked" => Ok(Kernel::Blocked),
            other => Err(Error::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// `P(x_i = +1 | rest) = (1 + tanh(phi)) / 2`.
#[inline]
pub fn up_probability(phi: f64) -> f64 {
    0.5 * (1.0 + phi.tanh())
}

#[inline]
fn sweep_sites<R: Rng + ?Sized>(
    model: &IsingModel,
    beta: f64,
    x: &mut [i8],
    sites: std::ops::Range<usize>,
    rng: &mut R,
) {
    for i in sites {
        let phi = beta * model.raw_field(i, x);
        x[i] = if rng.gen::<f64>() < up_probability(phi) { 1 } else { -1 };
    }
}

fn check_len(model: &IsingModel, x: &SpinConfig) -> Result<()> {
    if x.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// One sequential Gibbs sweep at inverse temperature `beta`.
pub fn gibbs_sweep<R: Rng + ?Sized>(model: &IsingModel, beta: f64, x: &mut SpinConfig, rng: &mut R) -> Result<()> {
    check_len(model, x)?;
    Kernel::Gibbs.apply(model, beta, x.as_mut_slice(), rng);
    Ok(())
}

/// Resamples the first layer given the second, then the second given the new first.
pub fn blocked_gibbs_sweep_bipartite<R: Rng + ?Sized>(
    model: &IsingModel,
    beta: f64,
    x: &mut SpinConfig,
    rng: &mut R,
) -> Result<()> {
    Kernel::Blocked.validate(model)?;
    check_len(model, x)?;
    Kernel::Blocked.apply(model, beta, x.as_mut_slice(), rng);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Annealed,
    Ais,
    ParallelTempering,
    Exact,
}

/// Provenance of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub model_hash: u64,
    pub beta_target: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    /// Annealing steps K, when an annealing path was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pt: Option<PtConfig>,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<SpinConfig>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn validate_target_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature {beta} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Annealed ancestral sampling: each of `n_samples` chains starts uniform and
/// applies one kernel sweep at `beta_target * b_k` for `k = 1..K`. The final
/// states are returned without weights.
pub fn annealed_sample_set(
    model: &IsingModel,
    beta_target: f64,
    schedule: &AnnealingSchedule,
    kernel: Kernel,
    n_samples: usize,
    seed: u64,
) -> Result<SampleSet> {
    validate_target_beta(beta_target)?;
    kernel.validate(model)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|chain| {
            let mut rng = stream_rng(seed, chain as u64);
            let mut x = SpinConfig::uniform(model.n(), &mut rng);
            for &b in &schedule.betas()[1..] {
                kernel.apply(model, beta_target * b, x.as_mut_slice(), &mut rng);
            }
            x
        })
        .collect();
    Ok(SampleSet {
        samples,
        meta: SampleMeta {
            sampler: SamplerKind::Annealed,
            seed,
            model_hash: model.content_hash(),
            beta_target,
            n_samples,
            kernel: Some(kernel),
            steps: Some(schedule.steps()),
            schedule: Some(schedule.descriptor()),
            pt: None,
            rng: crate::rng::RNG_NAME.into(),
        },
    })
}

/// Parallel-tempering settings. The ladder is geometric from `beta_target`
/// down to `beta_low_ratio * beta_target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtConfig {
    pub num_replicas: usize,
    pub beta_low_ratio: f64,
    pub sweeps_between_swaps: usize,
    /// Blocks discarded before recording.
    pub burn_in_blocks: usize,
}

impl Default for PtConfig {
    fn default() -> Self {
        Self {
            num_replicas: 10,
            beta_low_ratio: 0.01,
            sweeps_between_swaps: 100,
            burn_in_blocks: 1,
        }
    }
}

impl PtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_replicas == 0 || self.sweeps_between_swaps == 0 {
            return Err(Error::InvalidParameter(
                "replica and sweep counts must be at least 1".into(),
            ));
        }
        if !(self.beta_low_ratio > 0.0 && self.beta_low_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lowest ladder ratio {} must lie in (0, 1)",
                self.beta_low_ratio
            )));
        }
        Ok(())
    }

    /// Inverse temperatures of the replicas, index 0 at `beta_target`.
    pub fn ladder(&self, beta_target: f64) -> Vec<f64> {
        let r = self.num_replicas;
        if r == 1 {
            return vec![beta_target];
        }
        (0..r)
            .map(|k| {
                if k == 0 {
                    beta_target
                } else {
                    beta_target * self.beta_low_ratio.powf(k as f64 / (r - 1) as f64)
                }
            })
            .collect()
    }
}

/// Metropolis acceptance probability for exchanging the states of two replicas:
/// `min(1, exp((beta_a - beta_b)(E_a - E_b)))`.
#[inline]
pub fn swap_acceptance(beta_a: f64, beta_b: f64, energy_a: f64, energy_b: f64) -> f64 {
    let exponent = (beta_a - beta_b) * (energy_a - energy_b);
    if exponent >= 0.0 {
        1.0
    } else {
        exponent.exp()
    }
}

/// Replica-exchange sampler. Every block runs `sweeps_between_swaps` sweeps
/// on each replica, then proposes swaps between adjacent pairs starting at
/// pair (0,1) on even blocks and (1,2) on odd blocks, then records the state
/// of the replica at `beta_target`.
pub fn parallel_tempering_sample_set(
    model: &IsingModel,
    beta_target: f64,
    pt: &PtConfig,
    kernel: Kernel,
    n_samples: usize,
    seed: u64,
) -> Result<SampleSet> {
    validate_target_beta(beta_target)?;
    kernel.validate(model)?;
    pt.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let betas = pt.ladder(beta_target);
    let mut rng: McRng = stream_rng(seed, 0);
    let n = model.n();
    let mut replicas: Vec<Vec<i8>> = (0..betas.len())
        .map(|_| {
            let mut x = vec![1i8; n];
            randomize(&mut x, &mut rng);
            x
        })
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    let mut block = 0usize;
    while samples.len() < n_samples {
        for (x, &b) in replicas.iter_mut().zip(&betas) {
            for _ in 0..pt.sweeps_between_swaps {
                kernel.apply(model, b, x, &mut rng);
            }
        }
        let mut a = block % 2;
        while a + 1 < replicas.len() {
            let ea = model.energy_of(&replicas[a]);
            let eb = model.energy_of(&replicas[a + 1]);
            if rng.gen::<f64>() < swap_acceptance(betas[a], betas[a + 1], ea, eb) {
                replicas.swap(a, a + 1);
            }
            a += 2;
        }
        if block >= pt.burn_in_blocks {
            samples.push(SpinConfig::new(replicas[0].clone())?);
        }
        block += 1;
    }
    Ok(SampleSet {
        samples,
        meta: SampleMeta {
            sampler: SamplerKind::ParallelTempering,
            seed,
            model_hash: model.content_hash(),
            beta_target,
            n_samples,
            kernel: Some(kernel),
            steps: None,
            schedule: None,
            pt: Some(*pt),
            rng: crate::rng::RNG_NAME.into(),
        },
    })
}

/// I.i.d. draws from the exact distribution; test and reference use only.
pub fn exact_sample_set(model: &IsingModel, beta: f64, n_samples: usize, seed: u64) -> Result<SampleSet> {
    let dist = crate::exact::ExactDistribution::new(model, beta)?;
    let mut rng = stream_rng(seed, 0);
    let samples = (0..n_samples).map(|_| dist.sample(&mut rng)).collect();
    Ok(SampleSet {
        samples,
        meta: SampleMeta {
            sampler: SamplerKind::Exact,
            seed,
            model_hash: model.content_hash(),
            beta_target: beta,
            n_samples,
            kernel: None,
            steps: None,
            schedule: None,
            pt: None,
            rng: crate::rng::RNG_NAME.into(),
        },
    })
}
