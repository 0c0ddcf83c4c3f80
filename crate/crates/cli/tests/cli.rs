use std::path::Path;
use std::process::{Command, Output};

use isingmc_core::harness::{load_sweep_json, SWEEP_CSV_HEADER};
use isingmc_core::io::{read_model, read_sample_rows, sidecar_path};

fn isingmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isingmc"))
        .args(args)
        .env("ISINGMC_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = isingmc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sweep_beta_csv_has_one_row_per_method_and_beta() {
    let text = ok(&[
        "sweep-beta",
        "--n",
        "8",
        "--betas",
        "0.5,1,2",
        "--samples",
        "50",
        "--steps",
        "10",
        "--trials",
        "2",
        "--seed",
        "3",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_CSV_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 3 * 4);
    assert!(lines[1].starts_with("random,0.2,0.5,mci,50,10,2,"));
}

#[test]
fn sweep_json_round_trips_and_echoes_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    ok(&[
        "sweep-n",
        "--family",
        "hopfield",
        "--n",
        "6",
        "--samples",
        "20,40",
        "--steps",
        "5",
        "--trials",
        "2",
        "--methods",
        "smci,pt+smci",
        "--pt-interval",
        "2",
        "--seed",
        "9",
        "--format",
        "json",
        "-o",
        p(&out),
    ]);
    let result = load_sweep_json(&out).unwrap();
    assert_eq!(result.spec.seed, 9);
    assert_eq!(result.spec.sample_sizes, vec![20, 40]);
    assert_eq!(result.cells.len(), 4);
    assert!(result.rng.contains("xoshiro256++"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    std::fs::write(
        &config,
        r#"{"family": {"kind": "random", "n": 6, "p": 0.5, "range": {"low": -1.0, "high": 1.0}},
            "betas": [1.0], "sample_sizes": [30], "anneal_steps": [5], "methods": ["mci"], "trials": 2, "seed": 4}"#,
    )
    .unwrap();
    let text = ok(&["sweep-k", "--config", p(&config), "--steps", "3,6"]);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("random,0.5,1,mci,30,3,2,"));
}

#[test]
fn exact_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact");
    ok(&[
        "exact",
        "--n",
        "6",
        "--p",
        "1",
        "--beta",
        "1",
        "--seed",
        "2",
        "-o",
        p(&out),
    ]);
    let vertices = std::fs::read_to_string(out.join("vertices.csv")).unwrap();
    assert_eq!(vertices.lines().count(), 7);
    let edges = std::fs::read_to_string(out.join("edges.csv")).unwrap();
    assert_eq!(edges.lines().count(), 1 + 15);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["log_partition"].as_f64().unwrap().is_finite());
}

#[test]
fn generate_then_sample() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    ok(&[
        "generate",
        "--family",
        "bipartite",
        "--n0",
        "3",
        "--n1",
        "4",
        "--p",
        "1",
        "--seed",
        "5",
        "-o",
        p(&model_path),
    ]);
    let model = read_model(&model_path).unwrap();
    assert_eq!(model.n(), 7);
    assert!(model.layers().is_some());

    for sampler in ["annealed", "ais", "pt"] {
        let csv = dir.path().join(format!("{sampler}.csv"));
        ok(&[
            "sample",
            "--model",
            p(&model_path),
            "--sampler",
            sampler,
            "--beta",
            "1",
            "--samples",
            "25",
            "--steps",
            "4",
            "--seed",
            "6",
            "-o",
            p(&csv),
        ]);
        let (rows, weights) = read_sample_rows(&csv).unwrap();
        assert_eq!(rows.len(), 25);
        assert_eq!(weights.is_some(), sampler == "ais");
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&csv)).unwrap()).unwrap();
        assert_eq!(meta["kernel"], "blocked");
        assert_eq!(meta["seed"], 6);
    }
}

#[test]
fn time_phases_reports_both_methods() {
    let text = ok(&[
        "time-phases",
        "--n",
        "10",
        "--p",
        "1",
        "--samples",
        "50",
        "--steps",
        "10",
        "--repeats",
        "1",
        "--seed",
        "1",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",ais,"));
    assert!(lines[2].contains(",ais+smci,"));
}

#[test]
fn failures_exit_with_status_one() {
    let cases: [&[&str]; 5] = [
        &["sweep-beta", "--n", "8"],
        &["sweep-beta", "--n", "30", "--trials", "1", "--seed", "1"],
        &["sweep-beta", "--n", "8", "--methods", "bogus", "--seed", "1"],
        &["sweep-beta", "--n", "8", "--kernel", "blocked", "--seed", "1"],
        &[
            "sample",
            "--model",
            "/nonexistent/model.json",
            "--beta",
            "1",
            "--seed",
            "1",
            "-o",
            "/tmp/x.csv",
        ],
    ];
    for args in cases {
        let out = isingmc(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn bad_worker_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_isingmc"))
        .args(["exact", "--n", "4", "--seed", "1"])
        .env("ISINGMC_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
