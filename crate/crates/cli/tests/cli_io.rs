mod common;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use toricloc_cli::commands::{analyze::AnalyzeConfig, decode::DecodeConfig, evolve::EvolveConfig};
use toricloc_cli::commands::{qmc::QmcConfig, relative::RelativeConfig, scan::ScanConfig};
use toricloc_cli::config::{apply_override, bind, read_config};

use common::*;

fn round_trip<T: DeserializeOwned + Serialize + PartialEq + std::fmt::Debug>(path: &Path, sub: &str) {
    let tree = read_config(path, sub).unwrap().tree;
    let first: T = bind(&tree).unwrap();
    let again: T = bind(&serde_json::to_value(&first).unwrap()).unwrap();
    assert_eq!(first, again, "{}", path.display());
    let text = toml::to_string(&first).unwrap();
    let from_toml: T = bind(&serde_json::to_value(toml::from_str::<toml::Value>(&text).unwrap()).unwrap()).unwrap();
    assert_eq!(first, from_toml, "{}", path.display());
}

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(repo_root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_owned();
        match name.split('_').next().unwrap() {
            "evolve" => round_trip::<EvolveConfig>(&path, "evolve"),
            "relative" => round_trip::<RelativeConfig>(&path, "relative"),
            "decode" => round_trip::<DecodeConfig>(&path, "decode-experiment"),
            "qmc" => round_trip::<QmcConfig>(&path, "qmc"),
            "scan" => round_trip::<ScanConfig>(&path, "scan"),
            "analyze" => round_trip::<AnalyzeConfig>(&path, "analyze"),
            other => panic!("unexpected config {other}"),
        }
        seen += 1;
    }
    assert!(seen >= 12);
}

#[test]
fn overrides_parse_toml_literals() {
    let mut tree = serde_json::json!({"size": 4, "perturbation": {"kind": "field"}});
    apply_override(&mut tree, "size=6").unwrap();
    apply_override(&mut tree, "perturbation.eta=0.5").unwrap();
    apply_override(&mut tree, "perturbation.field=[0.0, 0.0, 1.0]").unwrap();
    apply_override(&mut tree, "metric=hausdorff").unwrap();
    assert_eq!(tree["size"], Value::from(6));
    assert_eq!(tree["perturbation"]["eta"], Value::from(0.5));
    assert_eq!(tree["perturbation"]["field"][2], Value::from(1.0));
    assert_eq!(tree["metric"], Value::from("hausdorff"));
    assert!(apply_override(&mut tree, "novalue").is_err());
    assert!(apply_override(&mut tree, "=3").is_err());
}

const SMALL_EVOLVE: &str = r#"
seed = 2
size = 6
sector = "electric"
initial = [[2, 2], [3, 2]]
delta = 10.0
t_max = 8
realizations = 3
metric = "relative-1-norm"

[perturbation]
kind = "field"
eta = 1.0
field = [0.0, 0.0, 1.0]
"#;

#[test]
fn invalid_configs_exit_two_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", SMALL_EVOLVE);
    let cases: [(&str, &[&str]); 4] = [
        ("size", &["--set", "size=0"]),
        ("metric", &["--set", "metric=euclid"]),
        ("bogus", &["--set", "bogus=1"]),
        ("cutoff", &["--set", "perturbation.cutoff=2.0"]),
    ];
    for (k, (needle, extra)) in cases.into_iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let mut args = vec!["evolve", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let (code, err) = run(&args, dir.path());
        assert_eq!(code, 2, "{err}");
        assert!(err.contains(needle), "{err}");
        assert!(outputs(&out).is_empty());
        let m = manifest(&out);
        assert_eq!(m["status"], "config_error");
        assert_eq!(m["outputs"], serde_json::json!([]));
    }
}

#[test]
fn missing_config_and_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["evolve", "--config", "nope.toml", "--out-dir", "o"], dir.path());
    assert_eq!(code, 2);
    let cfg = write(
        dir.path(),
        "a.toml",
        "seed = 1\ninputs = [\"x/scan_summary.json\", \"y/scan_summary.json\"]\nresamples = 20\ndrop_smallest = false\n",
    );
    let (code, err) = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out-dir", "o2"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("x/scan_summary.json") && err.contains("y/scan_summary.json"), "{err}");
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", SMALL_EVOLVE);
    let a = dir.path().join("a");
    let (code, err) = run(
        &["evolve", "--config", cfg.to_str().unwrap(), "--out-dir", "a", "--seed", "11", "--set", "delta=12.5"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    let m = manifest(&a);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["master_seed"], 11);
    assert_eq!(m["config"]["delta"], 12.5);
    assert_eq!(m["derived_seeds"].as_array().unwrap().len(), 3);
    let (code, err) = run(&["evolve", "--config", "a/manifest.json", "--out-dir", "b", "--workers", "2"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert_eq!(outputs(&a), outputs(&dir.path().join("b")));
    assert_eq!(manifest(&dir.path().join("b"))["config"], m["config"]);
    for name in ["profile.csv", "envelope.csv"] {
        let text = std::fs::read_to_string(a.join(name)).unwrap();
        assert!(text.starts_with("# manifest=manifest.json\n"));
    }
    let (code, _) = run(&["qmc", "--config", "a/manifest.json", "--out-dir", "c"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn qmc_resume_continues_and_rejects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let text = "seed = 3\nsize = 2\nbeta = 1.0\nhopping = 1.0\ndelta = 0.0\nmu = 0.0\ncheckpoint_every = 500\n\n\
                [schedule]\nthermalization = 100\nsweeps = 2000\nbins = 32\n";
    let cfg = write(dir.path(), "q.toml", text);
    let c = cfg.to_str().unwrap();
    let (code, err) = run(&["qmc", "--config", c, "--out-dir", "full"], dir.path());
    assert_eq!(code, 0, "{err}");
    let (code, err) = run(&["qmc", "--config", c, "--out-dir", "part", "--set", "schedule.sweeps=1000"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert!(dir.path().join("part/checkpoint.json").exists());
    let (code, err) = run(&["qmc", "--config", c, "--out-dir", "part", "--resume", "--seed", "4"], dir.path());
    assert_eq!(code, 1, "{err}");
    let (code, err) = run(&["evolve", "--config", c, "--out-dir", "x", "--resume"], dir.path());
    assert_ne!(code, 0, "{err}");
    let rows = csv_rows(&dir.path().join("full/bins.csv"));
    let summary = json(&dir.path().join("full/summary.json"));
    assert_eq!(rows.len() as u64, summary["observables"]["bins"].as_u64().unwrap());
}
