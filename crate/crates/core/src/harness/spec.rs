use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::exact::{exact_solve, exact_solve_bipartite, ExactSolution, MAX_EXACT_VERTICES};
use crate::generators::{generate_bipartite_model, generate_hopfield_model, generate_random_graph_model, ParamRange};
use crate::model::IsingModel;
use crate::samplers::{AnnealingSchedule, Kernel, PtConfig};

/// Random model family drawn afresh for every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelFamily {
    Random {
        n: usize,
        p: f64,
        #[serde(default)]
        range: ParamRange,
    },
    /// Hebbian couplings with `m = round(alpha * n)` patterns (at least one).
    Hopfield { n: usize, alpha: f64 },
    Bipartite {
        n0: usize,
        n1: usize,
        p: f64,
        #[serde(default)]
        range: ParamRange,
    },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Random { .. } => "random",
            ModelFamily::Hopfield { .. } => "hopfield",
            ModelFamily::Bipartite { .. } => "bipartite",
        }
    }

    /// The family's headline parameter: `p` for graphs, `alpha` for Hopfield.
    pub fn param(&self) -> f64 {
        match *self {
            ModelFamily::Random { p, .. } | ModelFamily::Bipartite { p, .. } => p,
            ModelFamily::Hopfield { alpha, .. } => alpha,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            ModelFamily::Random { n, .. } | ModelFamily::Hopfield { n, .. } => n,
            ModelFamily::Bipartite { n0, n1, .. } => n0 + n1,
        }
    }

    /// Number of vertices the exact oracle enumerates.
    pub fn oracle_size(&self) -> usize {
        match *self {
            ModelFamily::Bipartite { n0, .. } => n0,
            _ => self.vertex_count(),
        }
    }

    pub fn pattern_count(n: usize, alpha: f64) -> usize {
        ((alpha * n as f64).round() as usize).max(1)
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<IsingModel> {
        match *self {
            ModelFamily::Random { n, p, range } => generate_random_graph_model(n, p, range, rng),
            ModelFamily::Hopfield { n, alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Hopfield load {alpha} must be positive"
                    )));
                }
                generate_hopfield_model(n, Self::pattern_count(n, alpha), rng)
            }
            ModelFamily::Bipartite { n0, n1, p, range } => generate_bipartite_model(n0, n1, p, range, rng),
        }
    }

    pub fn default_kernel(&self) -> Kernel {
        match self {
            ModelFamily::Bipartite { .. } => Kernel::Blocked,
            _ => Kernel::Gibbs,
        }
    }

    pub fn exact(&self, model: &IsingModel, beta: f64) -> Result<ExactSolution> {
        match self {
            ModelFamily::Bipartite { .. } => exact_solve_bipartite(model, beta),
            _ => exact_solve(model, beta),
        }
    }
}

fn default_trials() -> usize {
    50
}

fn default_samples() -> Vec<usize> {
    vec![1000]
}

fn default_steps() -> Vec<usize> {
    vec![1000]
}

fn default_repeats() -> usize {
    3
}

/// Full description of an experiment. Every default is echoed back in the
/// output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: ModelFamily,
    pub betas: Vec<f64>,
    /// Sample counts N.
    #[serde(default = "default_samples")]
    pub sample_sizes: Vec<usize>,
    /// Annealing step counts K, each with a linear schedule.
    #[serde(default = "default_steps")]
    pub anneal_steps: Vec<usize>,
    pub methods: Vec<Method>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    /// Defaults to blocked Gibbs for bipartite families, single-site otherwise.
    #[serde(default)]
    pub kernel: Option<Kernel>,
    #[serde(default)]
    pub pt: PtConfig,
    /// Record per-method phase timings in the sweep result.
    #[serde(default)]
    pub record_timings: bool,
    /// Timing repetitions for `time_phases`; the median is reported.
    #[serde(default = "default_repeats")]
    pub timing_repeats: usize,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        Ok(spec)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel.unwrap_or_else(|| self.family.default_kernel())
    }

    /// Checks grids and counts; with `needs_oracle` also the enumeration guard.
    pub fn validate(&self, needs_oracle: bool) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.betas.is_empty() || self.sample_sizes.is_empty() || self.anneal_steps.is_empty() {
            return Err(Error::InvalidParameter("beta, N and K grids must be non-empty".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature {b} must be finite and >= 0"
            )));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::InvalidParameter("sample sizes must be at least 1".into()));
        }
        for &k in &self.anneal_steps {
            AnnealingSchedule::linear(k)?;
        }
        if self.methods.contains(&Method::PtSmci) {
            self.pt.validate()?;
        }
        if self.kernel() == Kernel::Blocked && !matches!(self.family, ModelFamily::Bipartite { .. }) {
            return Err(Error::MissingLayers);
        }
        if needs_oracle && self.family.oracle_size() > MAX_EXACT_VERTICES {
            return Err(Error::TooLarge {
                size: self.family.oracle_size(),
                limit: MAX_EXACT_VERTICES,
            });
        }
        Ok(())
    }
}
