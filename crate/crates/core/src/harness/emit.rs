use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::SweepResult;
use super::timing::PhaseTable;
use crate::error::{Error, Result};

pub const SWEEP_CSV_HEADER: [&str; 9] = [
    "family",
    "param",
    "beta",
    "method",
    "N",
    "K",
    "trials",
    "mae_mean",
    "mae_stderr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown output format `{other}`"))),
        }
    }
}

/// Renders the sweep table. Floats use the shortest round-trip decimal form.
pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER)?;
    let family = result.spec.family.name();
    let param = result.spec.family.param().to_string();
    for c in &result.cells {
        w.write_record([
            family.to_string(),
            param.clone(),
            c.point.beta.to_string(),
            c.method.tag().to_string(),
            c.point.n_samples.to_string(),
            c.point.anneal_steps.to_string(),
            c.trials.to_string(),
            c.mae_mean.to_string(),
            c.mae_stderr.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_all(path: &Path, text: &str) -> Result<()> {
    // Render fully before touching the file so a failure never leaves a partial table.
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Renders the sweep as CSV, or as JSON with its full spec and RNG metadata.
pub fn render_sweep(result: &SweepResult, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => sweep_csv(result),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(result)?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    write_all(path, &render_sweep(result, format)?)
}

pub fn load_sweep_json(path: &Path) -> Result<SweepResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Phase-timing table as CSV (`n,method,sampling_ms,weights_ms,expectations_ms,total_s,expectation_share`)
/// or JSON.
pub fn render_timing(table: &PhaseTable, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "n",
                "method",
                "sampling_ms",
                "weights_ms",
                "expectations_ms",
                "total_s",
                "expectation_share",
            ])?;
            for r in &table.rows {
                w.write_record([
                    table.n.to_string(),
                    r.method.tag().to_string(),
                    format!("{:.3}", r.sampling_ms),
                    format!("{:.3}", r.weights_ms),
                    format!("{:.3}", r.expectations_ms),
                    format!("{:.3}", r.total_s),
                    format!("{:.5}", r.expectation_share),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(table)?;
            s.push('\n');
            s
        }
    })
}

pub fn emit_timing(table: &PhaseTable, format: OutputFormat, path: &Path) -> Result<()> {
    write_all(path, &render_timing(table, format)?)
}
