//! Expectation and free-energy estimation for Ising models.
//!
//! The crate provides an exact enumeration oracle, single-site and blocked
//! Gibbs kernels, annealed and replica-exchange samplers, annealed importance
//! sampling (AIS), plain Monte Carlo and first-order spatial Monte Carlo
//! integration (1-SMCI) estimators with their AIS-weighted forms, and an
//! experiment harness that compares them against the exact answer.

pub mod ais;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod generators;
pub mod harness;
pub mod io;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod samplers;

pub use ais::{ais_normalizer, free_energy_estimate, run_ais, AisDiagnostics, WeightedSampleSet};
pub use error::{Error, Result};
pub use estimators::{
    empirical_estimator_variance, mae, mci_moments, smci1_magnetization, smci1_moments, smci1_pair_moment,
    weighted_moments, MaeResult, Method, MomentReport, WeightedMode,
};
pub use exact::{exact_solve, exact_solve_bipartite, ExactDistribution, ExactSolution};
pub use generators::{generate_bipartite_model, generate_hopfield_model, generate_random_graph_model, ParamRange};
pub use model::{ConditionalField, Edge, IsingModel, Layers, SpinConfig};
pub use samplers::{
    annealed_sample_set, blocked_gibbs_sweep_bipartite, exact_sample_set, gibbs_sweep, parallel_tempering_sample_set,
    swap_acceptance, up_probability, AnnealingSchedule, Kernel, PtConfig, SampleMeta, SampleSet, SamplerKind,
};
