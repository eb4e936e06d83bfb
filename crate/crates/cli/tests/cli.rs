use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ontolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontolab")).args(args).env_remove("ONTOLAB_THREADS").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write_config(dir: &Path, name: &str, json: Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Header lines, then the CSV body.
fn split_csv(text: &str) -> (Vec<&str>, Vec<&str>) {
    text.lines().partition(|l| l.starts_with('#'))
}

#[test]
fn list_names_every_module() {
    let out = ontolab(&["list"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().count() >= 12);
    for name in ["bell.chsh", "pq.wavelet", "cogwheel.spectrum", "dham.orbit", "fermi2q.spectrum"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&ontolab(&["--help"])), 0);
    assert_eq!(code(&ontolab(&["--version"])), 0);
}

#[test]
fn cogwheel_spectrum_schema() {
    let out = ontolab(&["cogwheel", "spectrum", "--cycles", "3:0.0,5:0.4,7:1.1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let (header, body) = split_csv(&text);
    assert_eq!(header[0], "# experiment: cogwheel.spectrum");
    assert!(header.iter().any(|h| h.starts_with("# version: ")));
    assert!(header.iter().any(|h| h.starts_with("# seed: ")));
    assert!(header.iter().any(|h| h.starts_with("# params: ")));
    assert_eq!(body[0], "level_index,energy,cycle");
    assert_eq!(body.len(), 1 + 15);
    assert!(body[1..].iter().all(|r| r.split(',').count() == 3));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = ontolab(&["lattice2d", "run", "--L", "16", "--steps", "20", "--seed", "3"]);
    let b = ontolab(&["lattice2d", "run", "--L", "16", "--steps", "20", "--seed", "3"]);
    let c = ontolab(&["lattice2d", "run", "--L", "16", "--steps", "20", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let x = ontolab(&["bell", "chsh", "--n", "5000", "--seed", "9", "--threads", "1"]);
    let y = ontolab(&["bell", "chsh", "--n", "5000", "--seed", "9"]);
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn stochastic_experiments_need_a_seed() {
    for args in [&["bell", "chsh"][..], &["lattice2d", "run"], &["bch", "compare"]] {
        assert_eq!(code(&ontolab(args)), 2, "{args:?}");
    }
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_param = write_config(dir.path(), "a.json", serde_json::json!({"experiment": "cogwheel.spectrum", "params": {"cycle": []}}));
    let unknown_key = write_config(dir.path(), "b.json", serde_json::json!({"experiment": "cogwheel.spectrum", "parameters": {}}));
    let unknown_experiment = write_config(dir.path(), "c.json", serde_json::json!({"experiment": "cogwheel.nothing"}));
    let bad_value = write_config(dir.path(), "d.json", serde_json::json!({"experiment": "cogwheel.spectrum", "params": {"cycles": ["x:1"]}}));
    for cfg in [&unknown_param, &unknown_key, &unknown_experiment, &bad_value] {
        let out = ontolab(&["run", "--config", cfg]);
        assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(code(&ontolab(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()])), 2);
    assert_eq!(code(&ontolab(&["run"])), 2);
    assert_eq!(code(&ontolab(&["cogwheel", "spectrum", "--config", &unknown_experiment])), 2);
    assert_eq!(code(&ontolab(&["cogwheel", "nonsense"])), 2);
    assert_eq!(code(&ontolab(&["cogwheel", "clock", "--n", "-3"])), 2);
    assert_eq!(code(&ontolab(&["--threads", "0", "cogwheel", "clock"])), 2);
    assert_eq!(code(&ontolab(&["rotator", "matrices", "--ell", "0.3"])), 2);
}

#[test]
fn runtime_contract_violation_exits_three() {
    // The E = 12 contour crosses a window of half width 4.
    let out = ontolab(&["dham", "orbit", "--E", "12", "--window", "4", "--steps", "10"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_config_and_out_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        serde_json::json!({"experiment": "cogwheel.spectrum", "params": {"cycles": ["3:0.0"]}, "out": out_dir}),
    );
    assert_eq!(code(&ontolab(&["run", "--config", &cfg])), 0);
    let from_config = std::fs::read_to_string(out_dir.join("cogwheel.spectrum.csv")).unwrap();
    assert_eq!(split_csv(&from_config).1.len(), 1 + 3);

    let out = ontolab(&["cogwheel", "spectrum", "--config", &cfg, "--cycles", "2:0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let overridden = std::fs::read_to_string(dir.path().join("cogwheel.spectrum.csv")).unwrap();
    assert!(overridden.contains("# params: {\"cycles\":[\"2:0.5\"]}"));
    assert_eq!(split_csv(&overridden).1.len(), 1 + 2);

    let seeded = write_config(dir.path(), "seeded.json", serde_json::json!({"experiment": "bell.chsh", "params": {"n": 2000}, "seed": 5}));
    let a = ontolab(&["run", "--config", &seeded]);
    let b = ontolab(&["bell", "chsh", "--n", "2000", "--seed", "5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ontolab"))
        .args(["pq", "wavelet", "--grid", "5", "--quad", "256"])
        .env("ONTOLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let serial = ontolab(&["pq", "wavelet", "--grid", "5", "--quad", "256", "--threads", "1"]);
    assert_eq!(out.stdout, serial.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_ontolab")).args(["list"]).env("ONTOLAB_THREADS", "many").output().unwrap();
    assert_eq!(code(&bad), 2);
}

fn without_version(mut v: Value) -> Value {
    v["provenance"].as_object_mut().unwrap().remove("version");
    v
}

#[test]
fn bell_chsh_matches_golden_output() {
    let golden: Value = serde_json::from_str(include_str!("golden/bell_chsh_n20000_seed7.json")).unwrap();
    let out = ontolab(&["bell", "chsh", "--angles", "22.5,-22.5,0,45", "--n", "20000", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let got: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(without_version(got.clone()), without_version(golden));
    let target = 2.0 * std::f64::consts::SQRT_2;
    assert!((got["S_quadrature"].as_f64().unwrap() - target).abs() < 1e-5);
    let stderr = got["stderr"].as_f64().unwrap();
    assert!((got["S_montecarlo"].as_f64().unwrap() - target).abs() < 4.0 * stderr);
}

#[test]
fn empty_universes_run_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("cogwheel.spectrum", serde_json::json!({"cycles": []}), 0),
        ("fermi2q.spectrum", serde_json::json!({"perm": []}), 1),
        ("pq.edge", serde_json::json!({"windows": []}), 0),
        ("dham.speed", serde_json::json!({"E": []}), 0),
        ("neutrino.correlations", serde_json::json!({"range": 0}), 1),
    ];
    for (name, params, rows) in cases {
        let cfg = write_config(dir.path(), "empty.json", serde_json::json!({"experiment": name, "params": params}));
        let out = ontolab(&["run", "--config", &cfg]);
        assert_eq!(code(&out), 0, "{name}");
        let text = stdout(&out);
        assert_eq!(split_csv(&text).1.len(), 1 + rows, "{name}");
    }
}

#[test]
fn verify_rejects_unknown_suite() {
    assert_eq!(code(&ontolab(&["verify", "--suite", "medium"])), 2);
}
