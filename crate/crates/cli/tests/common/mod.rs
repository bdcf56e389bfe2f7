#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use roughspt::fixtures::{brownian, geometric_prices};
use roughspt::io::write_path_file;
use roughspt::universal::{nontriviality_path, FunctionFamily};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_roughspt"));
    cmd.env_remove("ROUGHSPT_OUT_DIR");
    cmd
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

/// Writes the input files every command test draws from.
pub struct Inputs {
    pub brownian: PathBuf,
    pub constant: PathBuf,
    pub prices: PathBuf,
    pub flat_prices: PathBuf,
    pub circling: PathBuf,
    pub entropy: PathBuf,
    pub market_spec: PathBuf,
    pub family: PathBuf,
    pub figure1: PathBuf,
}

pub fn write_inputs(dir: &Path) -> Inputs {
    let brownian_path = brownian(11, 2, 1.0, 12).unwrap();
    let constant = brownian_path.map(2, |_, _| vec![0.5, -1.0]).unwrap();
    let prices = geometric_prices(12, 3, 1.0, 10, 0.3).unwrap();
    let flat = prices.map(3, |_, _| vec![1.0, 2.0, 3.0]).unwrap();
    let circling = nontriviality_path(0.45, 4, 64).unwrap();
    let inputs = Inputs {
        brownian: dir.join("brownian.csv"),
        constant: dir.join("constant.csv"),
        prices: dir.join("prices.csv"),
        flat_prices: dir.join("flat_prices.csv"),
        circling: dir.join("circling.csv"),
        entropy: dir.join("entropy.json"),
        market_spec: dir.join("market.json"),
        family: dir.join("family.json"),
        figure1: dir.join("figure1.json"),
    };
    write_path_file(&brownian_path, &inputs.brownian).unwrap();
    write_path_file(&constant, &inputs.constant).unwrap();
    write_path_file(&prices, &inputs.prices).unwrap();
    write_path_file(&flat, &inputs.flat_prices).unwrap();
    write_path_file(&circling, &inputs.circling).unwrap();
    std::fs::write(&inputs.entropy, r#"{"kind":"generated","generator":{"kind":"entropy","scale":1.0}}"#).unwrap();
    std::fs::write(&inputs.market_spec, r#"{"kind":"market"}"#).unwrap();
    let family = FunctionFamily::affine_grid(3, &[-0.5, 0.0, 0.5], 2.0).unwrap();
    std::fs::write(&inputs.family, family.to_json()).unwrap();
    std::fs::write(
        &inputs.figure1,
        r#"{
  "model": {"kind": "polynomial", "p": 0.15, "q": 0.3, "r": 0.2, "gamma": 0.25, "offset": 0.0},
  "simulation": {"step": 0.001, "horizon": 2.0, "paths": 64, "seed": 5, "record_every": 50}
}"#,
    )
    .unwrap();
    inputs
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every command once, writing into `out`.
pub fn run_all(inputs: &Inputs, out: &Path) -> Vec<PathBuf> {
    let jobs: Vec<(Vec<String>, &str)> = vec![
        (
            vec!["lift".into(), "--input".into(), s(&inputs.brownian).into(), "--levels".into(), "4".into()],
            "lift.csv",
        ),
        (
            vec!["wealth".into(), "--market".into(), s(&inputs.prices).into(), "--portfolio".into(), s(&inputs.entropy).into()],
            "wealth.csv",
        ),
        (
            vec![
                "universal".into(),
                "--market".into(),
                s(&inputs.circling).into(),
                "--market-kind".into(),
                "weights".into(),
                "--lift".into(),
                "geometric".into(),
                "--family".into(),
                s(&inputs.family).into(),
                "--T-grid".into(),
                format!("{},{}", 4.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI),
            ],
            "cover.csv",
        ),
        (
            vec!["figure1".into(), "--config".into(), s(&inputs.figure1).into()],
            "figure1.csv",
        ),
    ];
    for (mut args, name) in jobs {
        let target = out.join(name);
        args.push("--out".into());
        args.push(s(&target).into());
        let refs: Vec<&str> = args.iter().map(|a| a.as_str()).collect();
        let output = run(&refs, out);
        assert!(
            output.status.success(),
            "{:?} failed: {}",
            refs,
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    files.sort();
    files
}
