use std::fs;
use std::path::Path;
use std::process::Command;

use qmcmc::harness::{self, RunOptions};
use qmcmc::output::{read_manifest, read_rows, RESOLVED_CONFIG};
use qmcmc::records::{BoundRow, FitRow, GapRow, IprRow, IsingBoundRow, IsingExactRow, SummaryRow, TraceRow};
use qmcmc::ExperimentConfig;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

const SK: &str = r#"{"model": {"type": "sk", "N": [4, 5, 6]}, "beta": 5, "instances": 3, "base_seed": 11,
    "proposal": {"type": "quench", "h": [0.4, 1.6]}, "record_ipr": true}"#;

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn reruns_and_thread_counts_give_identical_files() {
    let root = tempfile::tempdir().unwrap();
    let c = config(SK);
    let runs: Vec<_> = [(1, "a"), (1, "b"), (3, "c")]
        .iter()
        .map(|&(threads, name)| {
            let dir = root.path().join(name);
            harness::run_gap_scaling(&c, &RunOptions::new(&dir, threads)).unwrap();
            dir
        })
        .collect();
    for file in ["gaps.csv", "ipr.csv", "summary.csv", "fits.csv", "ipr_fits.csv", RESOLVED_CONFIG] {
        let first = read(&runs[0], file);
        assert!(!first.is_empty(), "{file}");
        for other in &runs[1..] {
            assert_eq!(first, read(other, file), "{file}");
        }
    }
    let gaps: Vec<GapRow> = read_rows(&runs[0].join("gaps.csv")).unwrap();
    assert_eq!(gaps.len(), 3 * 3 * 2);
    assert!(gaps.iter().all(|r| (0.0..=1.0).contains(&r.delta) && r.db_residual <= 1e-9));
    assert!(read(&runs[0], "gaps.csv").starts_with("model,N,instance,h,t_mode,beta,delta,lambda2,reducible,"));
    let manifest = read_manifest(&runs[0]).unwrap();
    assert_eq!(manifest.files["gaps.csv"], 18);
    assert_eq!(manifest.failures, 0);
    let fits: Vec<FitRow> = read_rows(&runs[0].join("fits.csv")).unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0].sizes, "4;5;6");
}

#[test]
fn resumed_sweep_matches_uninterrupted_run() {
    let root = tempfile::tempdir().unwrap();
    let c = config(SK);
    let full = root.path().join("full");
    harness::run_gap_grid(&c, &RunOptions::new(&full, 1)).unwrap();

    // Simulate an interruption: keep the first units and a torn trailing unit.
    let part = root.path().join("part");
    fs::create_dir_all(&part).unwrap();
    let gaps = read(&full, "gaps.csv");
    let lines: Vec<&str> = gaps.lines().collect();
    fs::write(part.join("gaps.csv"), lines[..6].join("\n") + "\n").unwrap();
    let ipr = read(&full, "ipr.csv");
    let lines: Vec<&str> = ipr.lines().collect();
    fs::write(part.join("ipr.csv"), lines[..8].join("\n") + "\n").unwrap();

    harness::run_gap_grid(&c, &RunOptions::new(&part, 2)).unwrap();
    assert_eq!(read(&full, "gaps.csv"), read(&part, "gaps.csv"));
    assert_eq!(read(&full, "ipr.csv"), read(&part, "ipr.csv"));

    // A changed grid invalidates stored units instead of mixing them in.
    let mut changed = c.clone();
    changed.proposal = qmcmc::config::ProposalSpec::Quench {
        h: vec![0.4, 1.7],
        t_mode: Default::default(),
        t: vec![],
    };
    harness::run_gap_grid(&changed, &RunOptions::new(&part, 1)).unwrap();
    let rows: Vec<GapRow> = read_rows(&part.join("gaps.csv")).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r.h == Some(0.4) || r.h == Some(1.7)));
}

#[test]
fn zero_field_ipr_is_one() {
    let root = tempfile::tempdir().unwrap();
    let c = config(r#"{"model": {"type": "sk", "N": [4, 5, 6]}, "instances": 2, "proposal": {"type": "quench", "h": [0.0, 1.0]}}"#);
    harness::run_ipr_scan(&c, &RunOptions::new(root.path(), 1)).unwrap();
    let rows: Vec<IprRow> = read_rows(&root.path().join("ipr.csv")).unwrap();
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r.h == 0.0) {
        assert!((r.ipr_mean - 1.0).abs() < 1e-12);
    }
    let fits: Vec<FitRow> = read_rows(&root.path().join("ipr_fits.csv")).unwrap();
    let zero = fits.iter().find(|f| f.h == Some(0.0)).unwrap();
    assert!(zero.k.abs() < 1e-12);
    assert!(!root.path().join("gaps.csv").exists());
}

#[test]
fn infinite_temperature_uniform_baseline_is_exact() {
    let root = tempfile::tempdir().unwrap();
    let c = config(r#"{"model": {"type": "pspin", "N": [4, 5, 6]}, "beta": 0, "instances": 2, "proposal": {"type": "uniform"}}"#);
    harness::run_baselines(&c, &RunOptions::new(root.path(), 1)).unwrap();
    let gaps: Vec<GapRow> = read_rows(&root.path().join("gaps.csv")).unwrap();
    for r in gaps.iter().filter(|r| r.proposal == "uniform") {
        assert!((r.delta - 1.0).abs() < 1e-10);
        assert_eq!(r.t_mode, "none");
        assert_eq!(r.h, None);
    }
    // The β = 0 local walk on the hypercube is periodic, so only the uniform
    // series can be fitted.
    assert!(gaps.iter().filter(|r| r.proposal == "local").all(|r| r.delta.abs() < 1e-10));
    let fits: Vec<FitRow> = read_rows(&root.path().join("fits.csv")).unwrap();
    assert_eq!(fits.len(), 1);
    assert!(fits[0].k.abs() < 1e-10);
    let summary: Vec<SummaryRow> = read_rows(&root.path().join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 9);

    let warm = root.path().join("warm");
    let c = config(r#"{"model": {"type": "pspin", "N": [4, 5, 6]}, "beta": 2, "instances": 2, "proposal": {"type": "uniform"}}"#);
    harness::run_baselines(&c, &RunOptions::new(&warm, 1)).unwrap();
    let fits: Vec<FitRow> = read_rows(&warm.join("fits.csv")).unwrap();
    let labels: Vec<&str> = fits.iter().map(|f| f.proposal.as_str()).collect();
    assert_eq!(labels, ["uniform", "local", "local_times_n"]);
    assert!(fits[2].k < fits[1].k);
}

#[test]
fn cut_rows_respect_the_ladder() {
    let root = tempfile::tempdir().unwrap();
    let c = config(r#"{"model": {"type": "sk", "N": [5]}, "instances": 2, "proposal": {"type": "quench", "h": [0.8]}}"#);
    harness::run_cuts(&c, &RunOptions::new(root.path(), 1)).unwrap();
    let rows: Vec<BoundRow> = read_rows(&root.path().join("bounds.csv")).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r.delta <= r.lambda_b + 1e-10);
        assert!(r.fg <= r.cs + 1e-10 && r.cs <= r.ipr_bound + 1e-10 && r.cs <= r.fe_bound + 1e-10);
    }
    assert!(read(root.path(), "bounds.csv").starts_with("N,instance,h,beta,cut_threshold,delta,lambda_B,fg,cs,"));
}

#[test]
fn time_trace_starts_at_zero_gap() {
    let root = tempfile::tempdir().unwrap();
    let c = config(
        r#"{"model": {"type": "sk", "N": [4, 5]}, "instances": 2,
            "proposal": {"type": "quench", "h": [0.2, 1.0, 2.0], "t_mode": "finite", "t": [0, 1, 2]}}"#,
    );
    harness::run_time_trace(&c, &RunOptions::new(root.path(), 1)).unwrap();
    let trace: Vec<TraceRow> = read_rows(&root.path().join("time_trace.csv")).unwrap();
    assert_eq!(trace.len(), 2 * 2 * 3);
    for r in &trace {
        assert_eq!(r.count, 2);
        assert!(r.long_time_mean > 0.0);
        if r.t == 0.0 {
            assert_eq!(r.mean_delta, 0.0);
        }
    }
    assert_eq!(trace[0].label, "h_max");
    assert_eq!(trace[3].label, "h_min");
}

#[test]
fn ising_bound_outputs() {
    let root = tempfile::tempdir().unwrap();
    let c = config(
        r#"{"model": {"type": "ising", "N": [4, 6]}, "proposal": {"type": "quench", "h": [0, 0.5], "t_mode": "finite", "t": [1, 2]},
            "ising": {"analytic_sizes": [4, 8]}}"#,
    );
    let manifest = harness::run_ising_bound(&c, &RunOptions::new(root.path(), 1)).unwrap();
    assert_eq!(manifest.failures, 0);
    let exact: Vec<IsingExactRow> = read_rows(&root.path().join("ising_exact.csv")).unwrap();
    assert_eq!(exact.len(), 2 * 2 * 2);
    assert!(exact.iter().all(|r| r.bound >= r.delta - 1e-10));
    let bound: Vec<IsingBoundRow> = read_rows(&root.path().join("ising_bound.csv")).unwrap();
    assert_eq!(bound.len(), 2 * 2 * 2 * 2);
    for r in bound.iter().filter(|r| r.h == 0.0) {
        assert_eq!(r.total, r.second_term);
    }
    assert_eq!(read(root.path(), "ising_grid_N6.csv").lines().next(), Some("h,t,bound"));
}

#[test]
fn fit_reads_existing_runs() {
    let root = tempfile::tempdir().unwrap();
    let run = root.path().join("run");
    harness::run_gap_grid(&config(SK), &RunOptions::new(&run, 1)).unwrap();
    let fitted = root.path().join("fit");
    harness::run_fit(&config(SK), &run, &RunOptions::new(&fitted, 1)).unwrap();
    let fits: Vec<FitRow> = read_rows(&fitted.join("fits.csv")).unwrap();
    assert_eq!(fits.len(), 2);
    assert!(fitted.join("ipr_fits.csv").exists());
}

fn cli(args: &[&str], dir: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_qmcmc"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "off")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path();
    fs::write(dir.join("ok.json"), r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "quench", "h": [0.5]}}"#).unwrap();
    fs::write(dir.join("bad.json"), r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "quench", "h": []}}"#).unwrap();
    fs::write(
        dir.join("fail.json"),
        r#"{"model": {"type": "sk", "N": [4]}, "proposal": {"type": "perturbative", "h": [50]}}"#,
    )
    .unwrap();
    assert_eq!(cli(&["gap-grid", "--config", "ok.json", "--out", "ok", "--seed", "3"], dir), 0);
    let resolved = read(&dir.join("ok"), RESOLVED_CONFIG);
    assert!(resolved.contains("\"base_seed\": 3"));
    assert_eq!(cli(&["gap-grid", "--config", "bad.json", "--out", "bad"], dir), 2);
    assert_eq!(cli(&["gap-grid", "--config", "ok.json", "--out", "big", "--max-dim", "8"], dir), 2);
    assert_eq!(cli(&["gap-grid", "--config", "fail.json", "--out", "fail"], dir), 3);
    assert_eq!(cli(&["fit", "--out", "ok"], dir), 0);
}
