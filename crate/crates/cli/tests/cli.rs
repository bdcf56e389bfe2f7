mod common;

use std::fs;
use std::path::Path;

use common::{bin, run, run_all, s, write_inputs};
use roughspt::io::write_path_file;
use roughspt::path::{SampledPath, TimeGrid};
use roughspt::universal::{nontriviality_path, FunctionFamily};

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(path)
        .iter()
        .filter(|r| r[0] != "WARN")
        .map(|r| r[idx].parse().unwrap())
        .collect()
}

#[test]
fn constant_path_has_zero_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("lift.csv");
    let o = run(&["lift", "--input", s(&inputs.constant), "--levels", "4", "--out", s(&out)], dir.path());
    assert!(o.status.success());
    let gaps = column(&out, "gap");
    assert_eq!(gaps.len(), 3);
    assert!(gaps.iter().all(|g| *g == 0.0));
    assert!(!fs::read_to_string(&out).unwrap().contains("WARN"));
}

#[test]
fn smooth_path_summary_has_exact_chen() {
    let dir = tempfile::tempdir().unwrap();
    let grid = TimeGrid::dyadic(1.0, 10).unwrap();
    let path = SampledPath::from_fn(grid, 2, |t| vec![(3.0 * t).sin(), (2.0 * t).cos()]).unwrap();
    let input = dir.path().join("smooth.csv");
    write_path_file(&path, &input).unwrap();
    let out = dir.path().join("report.csv");
    let o = run(&["lift", "--input", s(&input), "--levels", "5", "--out", s(&out)], dir.path());
    assert!(o.status.success());
    let chen = column(&dir.path().join("report_summary.csv"), "chen_max_residual");
    assert_eq!(chen.len(), 5);
    assert!(chen.iter().all(|c| *c <= 1e-12));
}

#[test]
fn brownian_lift_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("lift.csv");
    let o = run(&["lift", "--input", s(&inputs.brownian), "--levels", "5", "--out", s(&out)], dir.path());
    assert!(o.status.success());
    assert_eq!(column(&out, "gap").len(), 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lift.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "lift");
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(f.as_str().unwrap()).exists());
    }
}

#[test]
fn malformed_csv_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "t,x1\n0,1\n0.5,oops\n1,2\n").unwrap();
    let o = run(&["lift", "--input", s(&input)], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn market_portfolio_has_unit_relative_wealth() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("w.csv");
    let o = run(
        &["wealth", "--market", s(&inputs.prices), "--portfolio", s(&inputs.market_spec), "--out", s(&out)],
        dir.path(),
    );
    assert!(o.status.success());
    // Compensated sums against prices carry a small discretisation error.
    assert!(column(&out, "V").iter().all(|v| (v - 1.0).abs() < 1e-4));
    assert!(dir.path().join("w_master.csv").exists());
}

#[test]
fn flat_prices_keep_wealth_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("w.csv");
    let o = run(
        &["wealth", "--market", s(&inputs.flat_prices), "--portfolio", s(&inputs.entropy), "--out", s(&out)],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(column(&out, "W").iter().all(|w| (w - 1.0).abs() < 1e-14));
}

#[test]
fn entropy_master_formula_gap_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    let market = roughspt::fixtures::diffusion_market(8, 3, 1.0, 12).unwrap();
    let input = dir.path().join("weights.csv");
    write_path_file(market.weights(), &input).unwrap();
    let spec = dir.path().join("entropy.json");
    fs::write(&spec, r#"{"kind":"generated","generator":{"kind":"entropy","scale":1.0}}"#).unwrap();
    let out = dir.path().join("w.csv");
    let o = run(
        &["wealth", "--market", s(&input), "--market-kind", "weights", "--portfolio", s(&spec), "--out", s(&out)],
        dir.path(),
    );
    assert!(o.status.success());
    let gaps = column(&dir.path().join("w_master.csv"), "gap");
    assert_eq!(gaps.len(), 2);
    assert!(gaps[1] < gaps[0]);
}

#[test]
fn horizon_truncates_wealth() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("w.csv");
    let o = run(
        &["wealth", "--market", s(&inputs.prices), "--portfolio", s(&inputs.entropy), "--T", "0.5", "--out", s(&out)],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(*column(&out, "t").last().unwrap(), 0.5);
}

#[test]
fn unknown_portfolio_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let spec = dir.path().join("odd.json");
    fs::write(&spec, r#"{"kind":"momentum"}"#).unwrap();
    let o = run(&["wealth", "--market", s(&inputs.prices), "--portfolio", s(&spec)], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

fn cover(dir: &Path, market: &Path, family: &FunctionFamily, grid: &str) -> std::path::PathBuf {
    let fam = dir.join("fam.json");
    fs::write(&fam, family.to_json()).unwrap();
    let out = dir.join("cover.csv");
    let o = run(
        &[
            "universal",
            "--market",
            s(market),
            "--market-kind",
            "weights",
            "--lift",
            "geometric",
            "--family",
            s(&fam),
            "--measure",
            "uniform",
            "--T-grid",
            grid,
            "--out",
            s(&out),
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn period_grid(periods: &[usize]) -> String {
    let tau = 2.0 * std::f64::consts::PI;
    periods.iter().map(|k| format!("{}", *k as f64 * tau)).collect::<Vec<_>>().join(",")
}

#[test]
fn single_member_has_zero_cover_gap() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let family = FunctionFamily::affine_grid(3, &[0.5], 2.0).unwrap();
    let out = cover(dir.path(), &inputs.circling, &family, &period_grid(&[1, 2, 3, 4]));
    let gaps = column(&out, "gap_scaled");
    assert_eq!(gaps.len(), 4);
    assert!(gaps.iter().all(|g| *g == 0.0));
}

#[test]
fn zero_member_bounds_best_wealth_below() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let family = FunctionFamily::affine_grid(3, &[-0.5, 0.0, 0.5], 2.0).unwrap();
    let out = cover(dir.path(), &inputs.circling, &family, &period_grid(&[1, 2, 3, 4]));
    assert!(column(&out, "logVstar").iter().all(|v| *v >= -1e-12));
}

#[test]
fn witness_member_wins_at_every_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let path = nontriviality_path(0.45, 8, 128).unwrap();
    let market = dir.path().join("circling.csv");
    write_path_file(&path, &market).unwrap();
    let family = FunctionFamily::affine_grid(3, &[0.0, 1.0], 2.0).unwrap();
    let out = cover(dir.path(), &market, &family, &period_grid(&[2, 4, 6, 8]));
    let winners = column(&out, "winner");
    assert!(winners.windows(2).all(|w| w[0] == w[1]), "{winners:?}");
}

#[test]
fn empty_family_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let fam = dir.path().join("empty.json");
    fs::write(&fam, r#"{"kind":"controlled","dim":3,"coefficients":[],"k_cap":1.0}"#).unwrap();
    let o = run(
        &["universal", "--market", s(&inputs.circling), "--market-kind", "weights", "--family", s(&fam)],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty family"));
}

#[test]
fn violated_model_inequality_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.json");
    fs::write(
        &cfg,
        r#"{"model":{"kind":"polynomial","p":0.1,"q":0.3,"r":0.2,"gamma":0.25},
            "simulation":{"step":0.01,"horizon":1.0,"paths":4,"seed":1}}"#,
    )
    .unwrap();
    let o = run(&["figure1", "--config", s(&cfg)], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 min(p, q, r) - γ >= 0 violated"));
}

#[test]
fn too_few_paths_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.json");
    fs::write(
        &cfg,
        r#"{"model":{"kind":"polynomial","p":0.15,"q":0.3,"r":0.2,"gamma":0.25},
            "simulation":{"step":0.01,"horizon":0.1,"paths":2,"seed":1}}"#,
    )
    .unwrap();
    let o = run(&["figure1", "--config", s(&cfg)], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn figure1_curves_start_at_zero_and_sidecar_exists() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let out = dir.path().join("fig.csv");
    let o = run(&["figure1", "--config", s(&inputs.figure1), "--out", s(&out)], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&out);
    for name in ["log_optimal", "alpha_optimal"] {
        let first = table.iter().find(|r| r[1] == name).unwrap();
        assert_eq!(first[0], "0");
        assert_eq!(first[2].parse::<f64>().unwrap(), 0.0);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig.meta.json")).unwrap()).unwrap();
    assert!(meta["alpha_star"]["alpha"].is_number());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&["figure1", "--config", s(&inputs.figure1), "--out", s(&a)], dir.path()).status.success());
    assert!(run(&["--seed", "99", "figure1", "--config", s(&inputs.figure1), "--out", s(&b)], dir.path())
        .status
        .success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["config"]["simulation"]["seed"], 99);
}

#[test]
fn out_dir_variable_sets_default_location() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let target = dir.path().join("results");
    let o = bin()
        .args(["lift", "--input", s(&inputs.brownian), "--levels", "3"])
        .env("ROUGHSPT_OUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("lift_report.csv").exists());
    assert!(target.join("lift_report_summary.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    let first = run_all(&inputs, &a);
    let second = run_all(&inputs, &b);
    assert_eq!(first.len(), second.len());
    for (x, y) in first.iter().zip(&second) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}
