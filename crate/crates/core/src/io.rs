//! File formats: model JSON, sample CSV with JSON sidecars, report tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ais::WeightedSampleSet;
use crate::error::{Error, Result};
use crate::estimators::{MaeResult, MomentReport};
use crate::model::{IsingModel, Layers, SpinConfig};
use crate::samplers::SampleSet;

/// Decimal rendering with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Deserialize)]
struct ModelFile {
    n: usize,
    biases: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    layers: Option<(usize, usize)>,
}

/// Model document: `{"n", "biases", "edges": [[i, j, J], ...], "layers"?: [n0, n1]}`.
pub fn model_to_json(model: &IsingModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"n\": {},", model.n());
    let biases: Vec<String> = model.biases().iter().map(|&h| format_f64(h)).collect();
    let _ = write!(out, "  \"biases\": [{}],\n  \"edges\": [", biases.join(", "));
    for (k, e) in model.edges().iter().enumerate() {
        let sep = if k == 0 { "\n" } else { ",\n" };
        let _ = write!(out, "{sep}    [{}, {}, {}]", e.i, e.j, format_f64(e.coupling));
    }
    if !model.edges().is_empty() {
        out.push_str("\n  ");
    }
    out.push(']');
    if let Some(l) = model.layers() {
        let _ = write!(out, ",\n  \"layers\": [{}, {}]", l.n0, l.n1);
    }
    out.push_str("\n}\n");
    out
}

pub fn model_from_json(text: &str) -> Result<IsingModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let model = IsingModel::new(file.n, file.biases, file.edges)?;
    match file.layers {
        Some((n0, n1)) => model.with_layers(Layers { n0, n1 }),
        None => Ok(model),
    }
}

pub fn write_model(model: &IsingModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<IsingModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

fn spin_header(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Path of the metadata sidecar next to a CSV file: `foo.csv` -> `foo.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

/// One row per sample, header `s0,s1,...`, plus a JSON metadata sidecar.
pub fn write_sample_set(s: &SampleSet, path: &Path) -> Result<()> {
    let n = s.samples.first().map_or(0, SpinConfig::len);
    let mut w = csv_writer(path)?;
    w.write_record(spin_header(n))?;
    for x in &s.samples {
        w.write_record(x.as_slice().iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_json(&s.meta, &sidecar_path(path))
}

/// Sample rows followed by a `log_weight` column, plus the sidecar.
pub fn write_weighted_sample_set(ws: &WeightedSampleSet, path: &Path) -> Result<()> {
    let n = ws.samples.first().map_or(0, SpinConfig::len);
    let mut w = csv_writer(path)?;
    let mut header = spin_header(n);
    header.push("log_weight".into());
    w.write_record(header)?;
    for (x, lw) in ws.samples.iter().zip(&ws.log_weights) {
        let mut row: Vec<String> = x.as_slice().iter().map(|v| v.to_string()).collect();
        row.push(format_f64(*lw));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_json(&ws.meta, &sidecar_path(path))
}

/// Reads spin rows (and `log_weight`, when present) from a sample CSV.
pub fn read_sample_rows(path: &Path) -> Result<(Vec<SpinConfig>, Option<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let weighted = headers.iter().next_back() == Some("log_weight");
    let n = headers.len() - usize::from(weighted);
    let mut samples = Vec::new();
    let mut weights = Vec::new();
    for record in r.records() {
        let record = record?;
        let spins = record
            .iter()
            .take(n)
            .map(|f| {
                f.parse::<i8>()
                    .map_err(|_| Error::InvalidParameter(format!("bad spin `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(SpinConfig::new(spins)?);
        if weighted {
            let f = &record[n];
            weights.push(
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad log weight `{f}`")))?,
            );
        }
    }
    Ok((samples, weighted.then_some(weights)))
}

/// Vertex table `vertex,magnetization`.
pub fn write_vertex_table(report: &MomentReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["vertex", "magnetization"])?;
    for (i, m) in report.magnetization.iter().enumerate() {
        w.write_record([i.to_string(), format_f64(*m)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Edge table `i,j,pair_moment,covariance[,abs_err]`.
pub fn write_edge_table(report: &MomentReport, mae: Option<&MaeResult>, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["i", "j", "pair_moment", "covariance"];
    if mae.is_some() {
        header.push("abs_err");
    }
    w.write_record(&header)?;
    for (k, &(i, j)) in report.edges.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            j.to_string(),
            format_f64(report.pair_moment[k]),
            format_f64(report.covariance[k]),
        ];
        if let Some(m) = mae {
            row.push(format_f64(m.per_edge_abs_err[k]));
        }
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    report: &'a MomentReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    mae: Option<f64>,
}

pub fn write_report_json(report: &MomentReport, mae: Option<&MaeResult>, path: &Path) -> Result<()> {
    write_json(
        &ReportSummary {
            report,
            mae: mae.map(|m| m.mae),
        },
        path,
    )
}
