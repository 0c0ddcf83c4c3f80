//! Criterion benchmarks for sweeps, samplers, estimators and enumeration;
//! run with `cargo bench -p isingmc-bench`.
