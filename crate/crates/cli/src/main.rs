//! `isingmc` command line: experiment sweeps, exact solutions, sampling and
//! phase timing for Ising-model expectation estimators.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use isingmc_core::harness::{
    emit, emit_timing, render_sweep, render_timing, run_sweep, time_phases, ExperimentSpec, ModelFamily, OutputFormat,
    SweepResult,
};
use isingmc_core::io::{
    read_model, write_edge_table, write_model, write_sample_set, write_vertex_table, write_weighted_sample_set,
};
use isingmc_core::rng::{derive_seed_path, seeded};
use isingmc_core::{
    annealed_sample_set, exact_solve, exact_solve_bipartite, parallel_tempering_sample_set, run_ais, AnnealingSchedule,
    IsingModel, Kernel, Method, MomentReport, ParamRange, PtConfig,
};

/// Environment variable overriding the worker-thread count.
const WORKERS_ENV: &str = "ISINGMC_WORKERS";

#[derive(Parser)]
#[command(
    name = "isingmc",
    version,
    about = "Monte Carlo, SMCI and AIS estimators for Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MAE versus inverse temperature.
    SweepBeta(SweepArgs),
    /// MAE versus sample count N.
    SweepN(SweepArgs),
    /// MAE versus annealing steps K.
    SweepK(SweepArgs),
    /// SMCI, AIS-weighted SMCI and replica-exchange SMCI side by side.
    ComparePt(SweepArgs),
    /// Wall-clock split of sampling, weights and expectations.
    TimePhases(SweepArgs),
    /// Exact moments and free energy by enumeration.
    Exact(ExactArgs),
    /// Draw a model from a family and write it as JSON.
    Generate(GenerateArgs),
    /// Draw a sample set from a model file and write it as CSV.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Random,
    Hopfield,
    Bipartite,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Model family.
    #[arg(long, value_enum)]
    family: Option<FamilyKind>,
    /// Vertex count (random and Hopfield families).
    #[arg(long)]
    n: Option<usize>,
    /// Connection probability (random and bipartite families).
    #[arg(long)]
    p: Option<f64>,
    /// Pattern load m/n (Hopfield family).
    #[arg(long)]
    alpha: Option<f64>,
    /// First-layer size (bipartite family).
    #[arg(long)]
    n0: Option<usize>,
    /// Second-layer size (bipartite family).
    #[arg(long)]
    n1: Option<usize>,
    /// Half-width a of the uniform parameter range [-a, a).
    #[arg(long)]
    range: Option<f64>,
}

impl FamilyArgs {
    fn any_set(&self) -> bool {
        self.family.is_some()
            || self.n.is_some()
            || self.p.is_some()
            || self.alpha.is_some()
            || self.n0.is_some()
            || self.n1.is_some()
            || self.range.is_some()
    }

    fn build(&self, default: FamilyKind) -> ModelFamily {
        let range = self.range.map_or_else(ParamRange::default, ParamRange::symmetric);
        match self.family.unwrap_or(default) {
            FamilyKind::Random => ModelFamily::Random {
                n: self.n.unwrap_or(20),
                p: self.p.unwrap_or(0.2),
                range,
            },
            FamilyKind::Hopfield => ModelFamily::Hopfield {
                n: self.n.unwrap_or(20),
                alpha: self.alpha.unwrap_or(0.2),
            },
            FamilyKind::Bipartite => ModelFamily::Bipartite {
                n0: self.n0.unwrap_or(10),
                n1: self.n1.unwrap_or(100),
                p: self.p.unwrap_or(0.5),
                range,
            },
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment document; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Inverse temperatures, comma separated.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Sample counts N, comma separated.
    #[arg(long = "samples", value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    /// Annealing steps K, comma separated.
    #[arg(long = "steps", value_delimiter = ',')]
    anneal_steps: Option<Vec<usize>>,
    /// Methods: mci, smci, ais, ais+smci, pt+smci, exact.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; every trial, chain and replica stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Transition kernel: gibbs or blocked.
    #[arg(long)]
    kernel: Option<String>,
    /// Replica count for parallel tempering.
    #[arg(long)]
    pt_replicas: Option<usize>,
    /// Sweeps between replica-exchange proposals.
    #[arg(long)]
    pt_interval: Option<usize>,
    /// Timing repetitions (median reported).
    #[arg(long)]
    repeats: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

struct SweepDefaults {
    family: FamilyKind,
    betas: Vec<f64>,
    sample_sizes: Vec<usize>,
    anneal_steps: Vec<usize>,
    methods: Vec<Method>,
}

impl SweepArgs {
    fn spec(&self, d: SweepDefaults) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentSpec::from_json(&text)?
            }
            None => {
                let Some(seed) = self.seed else {
                    bail!("--seed is required (or supply --config with a seed)");
                };
                ExperimentSpec {
                    family: self.family.build(d.family),
                    betas: d.betas,
                    sample_sizes: d.sample_sizes,
                    anneal_steps: d.anneal_steps,
                    methods: d.methods,
                    trials: 50,
                    seed,
                    kernel: None,
                    pt: PtConfig::default(),
                    record_timings: false,
                    timing_repeats: 3,
                }
            }
        };
        if self.config.is_some() && self.family.any_set() {
            spec.family = self.family.build(match spec.family {
                ModelFamily::Random { .. } => FamilyKind::Random,
                ModelFamily::Hopfield { .. } => FamilyKind::Hopfield,
                ModelFamily::Bipartite { .. } => FamilyKind::Bipartite,
            });
        }
        if let Some(b) = &self.betas {
            spec.betas = b.clone();
        }
        if let Some(n) = &self.sample_sizes {
            spec.sample_sizes = n.clone();
        }
        if let Some(k) = &self.anneal_steps {
            spec.anneal_steps = k.clone();
        }
        if let Some(m) = &self.methods {
            spec.methods = m.iter().map(|t| t.parse()).collect::<isingmc_core::Result<_>>()?;
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(k) = &self.kernel {
            spec.kernel = Some(k.parse()?);
        }
        if let Some(r) = self.pt_replicas {
            spec.pt.num_replicas = r;
        }
        if let Some(i) = self.pt_interval {
            spec.pt.sweeps_between_swaps = i;
        }
        if let Some(r) = self.repeats {
            spec.timing_repeats = r;
        }
        Ok(spec)
    }

    fn format(&self) -> Result<OutputFormat> {
        Ok(self.format.parse()?)
    }
}

#[derive(Args)]
struct ExactArgs {
    /// Model JSON file; otherwise a model is drawn from the family flags.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Directory for `vertices.csv`, `edges.csv` and `summary.json`; summary to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerChoice {
    Annealed,
    Ais,
    Pt,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "ais")]
    sampler: SamplerChoice,
    #[arg(long)]
    beta: f64,
    #[arg(long = "samples", default_value_t = 1000)]
    n_samples: usize,
    #[arg(long = "steps", default_value_t = 1000)]
    anneal_steps: usize,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    seed: u64,
    /// CSV path; the metadata sidecar is written next to it.
    #[arg(long, short)]
    out: PathBuf,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_sweep(result: &SweepResult, args: &SweepArgs) -> Result<()> {
    let format = args.format()?;
    match &args.out {
        Some(path) => emit(result, format, path)?,
        None => write_output(None, &render_sweep(result, format)?)?,
    }
    Ok(())
}

fn sweep(args: &SweepArgs, defaults: SweepDefaults) -> Result<()> {
    let spec = args.spec(defaults)?;
    log::info!("running {} trials over {} grid points", spec.trials, spec.grid().len());
    let result = run_sweep(&spec)?;
    emit_sweep(&result, args)
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mci, Method::Smci, Method::Ais, Method::AisSmci]
}

fn model_from(path: Option<&Path>, family: &FamilyArgs, seed: Option<u64>) -> Result<IsingModel> {
    match path {
        Some(p) => Ok(read_model(p)?),
        None => {
            let Some(seed) = seed else {
                bail!("--seed is required when drawing a model from a family");
            };
            Ok(family
                .build(FamilyKind::Random)
                .generate(&mut seeded(derive_seed_path(seed, &[0, 0])))?)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepBeta(args) => sweep(
            &args,
            SweepDefaults {
                family: FamilyKind::Random,
                betas: (1..=10)
                    .map(|k| f64::from(k) * 0.2)
                    .map(|b| (b * 10.0).round() / 10.0)
                    .collect(),
                sample_sizes: vec![1000],
                anneal_steps: vec![1000],
                methods: default_methods(),
            },
        ),
        Command::SweepN(args) => sweep(
            &args,
            SweepDefaults {
                family: FamilyKind::Random,
                betas: vec![2.0],
                sample_sizes: vec![100, 316, 1000, 3162],
                anneal_steps: vec![1000],
                methods: default_methods(),
            },
        ),
        Command::SweepK(args) => sweep(
            &args,
            SweepDefaults {
                family: FamilyKind::Random,
                betas: vec![2.0],
                sample_sizes: vec![1000],
                anneal_steps: vec![10, 50, 100, 500, 1000],
                methods: default_methods(),
            },
        ),
        Command::ComparePt(args) => sweep(
            &args,
            SweepDefaults {
                family: FamilyKind::Hopfield,
                betas: (1..=10)
                    .map(|k| f64::from(k) * 0.2)
                    .map(|b| (b * 10.0).round() / 10.0)
                    .collect(),
                sample_sizes: vec![1000],
                anneal_steps: vec![1000],
                methods: vec![Method::Smci, Method::AisSmci, Method::PtSmci],
            },
        ),
        Command::TimePhases(args) => {
            let mut spec = args.spec(SweepDefaults {
                family: FamilyKind::Random,
                betas: vec![1.0],
                sample_sizes: vec![1000],
                anneal_steps: vec![1000],
                methods: vec![Method::Ais, Method::AisSmci],
            })?;
            if args.config.is_none() && !args.family.any_set() {
                spec.family = ModelFamily::Random {
                    n: 50,
                    p: 1.0,
                    range: ParamRange::default(),
                };
            }
            let table = time_phases(&spec)?;
            let format = args.format()?;
            match &args.out {
                Some(p) => emit_timing(&table, format, p)?,
                None => write_output(None, &render_timing(&table, format)?)?,
            }
            Ok(())
        }
        Command::Exact(args) => {
            let model = model_from(args.model.as_deref(), &args.family, args.seed)?;
            let solution = if model.layers().is_some() {
                exact_solve_bipartite(&model, args.beta)?
            } else {
                exact_solve(&model, args.beta)?
            };
            let report = MomentReport::from_exact(&solution);
            match &args.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                    write_vertex_table(&report, &dir.join("vertices.csv"))?;
                    write_edge_table(&report, None, &dir.join("edges.csv"))?;
                    let mut text = serde_json::to_string_pretty(&solution)?;
                    text.push('\n');
                    std::fs::write(dir.join("summary.json"), text)?;
                }
                None => {
                    let mut text = serde_json::to_string_pretty(&solution)?;
                    text.push('\n');
                    write_output(None, &text)?;
                }
            }
            Ok(())
        }
        Command::Generate(args) => {
            let model = model_from(None, &args.family, Some(args.seed))?;
            write_model(&model, &args.out)?;
            Ok(())
        }
        Command::Sample(args) => {
            let model = read_model(&args.model)?;
            let kernel = match &args.kernel {
                Some(k) => k.parse()?,
                None if model.layers().is_some() => Kernel::Blocked,
                None => Kernel::Gibbs,
            };
            let schedule = AnnealingSchedule::linear(args.anneal_steps)?;
            match args.sampler {
                SamplerChoice::Annealed => {
                    let s = annealed_sample_set(&model, args.beta, &schedule, kernel, args.n_samples, args.seed)?;
                    write_sample_set(&s, &args.out)?;
                }
                SamplerChoice::Ais => {
                    let ws = run_ais(&model, args.beta, &schedule, kernel, args.n_samples, args.seed)?;
                    write_weighted_sample_set(&ws, &args.out)?;
                }
                SamplerChoice::Pt => {
                    let s = parallel_tempering_sample_set(
                        &model,
                        args.beta,
                        &PtConfig::default(),
                        kernel,
                        args.n_samples,
                        args.seed,
                    )?;
                    write_sample_set(&s, &args.out)?;
                }
            }
            Ok(())
        }
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_workers().and_then(|()| run(cli)) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
