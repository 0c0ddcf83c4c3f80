//! Experiment runner: seeded trial fan-out over a model family, paired
//! method comparison against the exact oracle, aggregation, phase timing and
//! CSV/JSON emission.

mod emit;
mod spec;
pub mod stats;
mod sweep;
mod timing;

pub use emit::{
    emit, emit_timing, load_sweep_json, render_sweep, render_timing, sweep_csv, OutputFormat, SWEEP_CSV_HEADER,
};
pub use spec::{ExperimentSpec, ModelFamily};
pub use sweep::{run_sweep, GridPoint, MethodTiming, SweepCell, SweepResult};
pub use timing::{time_phases, PhaseRow, PhaseTable};
