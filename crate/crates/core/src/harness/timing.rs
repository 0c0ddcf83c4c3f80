use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;
use super::stats::median;
use crate::ais::run_ais_timed;
use crate::error::{Error, Result};
use crate::estimators::{weighted_moments, Method, WeightedMode};
use crate::rng::{derive_seed_path, seeded};
use crate::samplers::AnnealingSchedule;

/// Median phase times of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub method: Method,
    pub sampling_ms: f64,
    pub weights_ms: f64,
    pub expectations_ms: f64,
    pub total_s: f64,
    /// `expectations / total`, 0 when the total is 0.
    pub expectation_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub n: usize,
    pub edges: usize,
    pub beta: f64,
    pub n_samples: usize,
    pub anneal_steps: usize,
    pub repeats: usize,
    pub rows: Vec<PhaseRow>,
}

impl PhaseTable {
    pub fn row(&self, method: Method) -> Option<&PhaseRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Times sample generation, weight evaluation and expectation evaluation of
/// AIS and AIS-weighted 1-SMCI on one model of the family, using the first
/// beta, N and K of the spec. Sampling and weights are shared by both
/// methods; each phase is repeated `timing_repeats` times and the median kept.
pub fn time_phases(spec: &ExperimentSpec) -> Result<PhaseTable> {
    spec.validate(false)?;
    if spec.timing_repeats == 0 {
        return Err(Error::InvalidParameter("timing needs at least one repeat".into()));
    }
    let beta = spec.betas[0];
    let n_samples = spec.sample_sizes[0];
    let steps = spec.anneal_steps[0];
    let model = spec
        .family
        .generate(&mut seeded(derive_seed_path(spec.seed, &[0, 0])))?;
    let schedule = AnnealingSchedule::linear(steps)?;
    let kernel = spec.kernel();

    let mut sampling = Vec::new();
    let mut weights = Vec::new();
    let mut exp_ais = Vec::new();
    let mut exp_proposed = Vec::new();
    for rep in 0..spec.timing_repeats {
        let seed = derive_seed_path(spec.seed, &[0, 1, rep as u64]);
        let (ws, times) = run_ais_timed(&model, beta, &schedule, kernel, n_samples, seed)?;
        sampling.push(times.sampling.as_secs_f64() * 1e3);
        weights.push(times.weights.as_secs_f64() * 1e3);
        let t = Instant::now();
        std::hint::black_box(weighted_moments(&model, beta, &ws, WeightedMode::Mci)?);
        exp_ais.push(t.elapsed().as_secs_f64() * 1e3);
        let t = Instant::now();
        std::hint::black_box(weighted_moments(&model, beta, &ws, WeightedMode::Smci1)?);
        exp_proposed.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let (s, w) = (median(&sampling), median(&weights));
    let row = |method, e: f64| {
        let total_ms = s + w + e;
        PhaseRow {
            method,
            sampling_ms: s,
            weights_ms: w,
            expectations_ms: e,
            total_s: total_ms / 1e3,
            expectation_share: if total_ms > 0.0 { e / total_ms } else { 0.0 },
        }
    };
    Ok(PhaseTable {
        n: model.n(),
        edges: model.edges().len(),
        beta,
        n_samples,
        anneal_steps: steps,
        repeats: spec.timing_repeats,
        rows: vec![
            row(Method::Ais, median(&exp_ais)),
            row(Method::AisSmci, median(&exp_proposed)),
        ],
    })
}
