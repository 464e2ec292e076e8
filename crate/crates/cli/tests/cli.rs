use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sechyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sechyp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SHORT_LORENZ: &str = r#"
name = "short-lorenz"
horizon = 60.0
dt = 0.05
transient = 10.0
tau = 0.5
d_e = 1
orders = [2]
singularity_seeds = [[0.5, 0.5, 0.5], [8.0, 8.0, 27.0], [-8.0, -8.0, 27.0]]

[field]
kind = "lorenz"
sigma = 10.0
rho = 28.0
beta = 2.6666666666666665

[initial]
points = [[1.0, 1.0, 20.0]]
random = 1
box_lo = [-15.0, -20.0, 5.0]
box_hi = [15.0, 20.0, 45.0]
seed = 3
"#;

#[test]
fn wedge_table_is_pass_fail_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = sechyp(&[
        "verify",
        "--example",
        "wedge",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&out.join("verify.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["verdict"], "Pass");
    let induced = report["orbits"][0]["induced"].as_array().unwrap();
    let verdicts: Vec<&str> = induced
        .iter()
        .map(|r| r["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(verdicts, ["Pass", "Fail", "Pass"]);
    let (e, f) = (
        induced[1]["e_rate"].as_f64().unwrap(),
        induced[1]["f_rate"].as_f64().unwrap(),
    );
    assert!((e - 7.0).abs() < 1e-6 && (f - 6.0).abs() < 1e-6, "{e} {f}");
    let summary = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(summary.contains("ensemble verdict: Pass"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let out = out.to_str().unwrap();
        assert_eq!(
            code(&sechyp(&["verify", "--example", "wedge", "--out", out])),
            0
        );
    }
    assert_eq!(
        fs::read(a.join("verify.json")).unwrap(),
        fs::read(b.join("verify.json")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("cache/orbit_000.csv")).unwrap(),
        fs::read(b.join("cache/orbit_000.csv")).unwrap()
    );
}

#[test]
fn jlab_is_seeded_and_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SHORT_LORENZ}\n[jlab]\ntrials = 50\nsamples = 400\nseed = 9\n"),
    );
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let run = sechyp(&["jlab", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stdout));
        reports.push(fs::read(out.join("jlab.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(report["seed"], 9);
    for suite in report["suites"].as_array().unwrap() {
        assert_eq!(suite["violations"], 0);
        assert_eq!(suite["errors"], 0);
    }
}

#[test]
fn invalid_order_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SHORT_LORENZ.replace("orders = [2]", "orders = [3]"),
    );
    let out = dir.path().join("out");
    let run = sechyp(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("order p = 3"));
    assert!(!out.exists());
}

#[test]
fn usage_and_io_errors_exit_with_three() {
    assert_eq!(code(&sechyp(&["verify"])), 3);
    assert_eq!(code(&sechyp(&["frobnicate"])), 3);
    assert_eq!(
        code(&sechyp(&["simulate", "--config", "/nonexistent/run.toml"])),
        3
    );
    assert_eq!(code(&sechyp(&["--help"])), 0);
}

#[test]
fn zero_field_gives_constant_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
name = "still"
horizon = 10.0
dt = 0.5
tau = 0.5
d_e = 1
orders = [2]

[field]
kind = "linear"
matrix = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

[initial]
points = [[1.0, -2.0, 3.0], [0.0, 0.0, 0.0]]
"#,
    );
    let out = dir.path().join("out");
    let run = sechyp(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let report = json(&out.join("simulate.json"));
    assert_eq!(report["orbits"].as_array().unwrap().len(), 2);
    let text = fs::read_to_string(out.join("cache/orbit_000.csv")).unwrap();
    let mut rows = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut count = 0;
    for row in rows.records() {
        let row = row.unwrap();
        let x: Vec<f64> = (1..4).map(|i| row[i].parse().unwrap()).collect();
        assert_eq!(x, [1.0, -2.0, 3.0]);
        count += 1;
    }
    assert_eq!(count, 21);
}

#[test]
fn rotation_has_no_splitting_to_certify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
name = "rotation"
horizon = 40.0
dt = 0.25
tau = 1.0
d_e = 1
orders = [2]

[field]
kind = "linear"
matrix = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

[initial]
points = [[1.0, 0.0, 0.0]]
"#,
    );
    let out = dir.path().join("out");
    let run = sechyp(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 2);
    let report = json(&out.join("verify.json"));
    let stages = report["orbits"][0]["chains"]["2"]["stages"]
        .as_array()
        .unwrap();
    assert_eq!(stages.len(), 1);
    assert_eq!(stages[0]["stage"], "splitting");
    assert_eq!(stages[0]["certificate"]["verdict"], "Indeterminate");
}

#[test]
fn lorenz_spectrum_reuses_its_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_LORENZ);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(
        code(&sechyp(&["simulate", "--config", &cfg, "--out", out_s])),
        0
    );
    let cache = out.join("cache/orbit_001.csv");
    let before = fs::metadata(&cache).unwrap().modified().unwrap();

    let run = sechyp(&["spectrum", "--config", &cfg, "--out", out_s]);
    assert!(
        matches!(code(&run), 0 | 2),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(fs::metadata(&cache).unwrap().modified().unwrap(), before);

    let report = json(&out.join("spectrum.json"));
    assert_eq!(report["schema"], 1);
    for orbit in report["orbits"].as_array().unwrap() {
        let sum = orbit["sum"].as_f64().unwrap();
        assert!((sum + 41.0 / 3.0).abs() < 0.05, "{sum}");
        let p2 = orbit["p_sectional"]["2"][0].as_f64().unwrap();
        assert!(p2 > 0.5, "{p2}");
    }
    let series = fs::read_to_string(out.join("spectrum_000.csv")).unwrap();
    assert!(series.starts_with("# "));
    assert!(series.contains("\nt,chi_1,chi_2,chi_3\n"));
    assert!(out.join("domination_000.csv").exists());
}

#[test]
fn emitted_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_LORENZ);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = sechyp(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "11",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    let emitted = a.join("config.toml").to_string_lossy().into_owned();
    let run = sechyp(&[
        "simulate",
        "--config",
        &emitted,
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(
        fs::read(a.join("cache/orbit_001.csv")).unwrap(),
        fs::read(b.join("cache/orbit_001.csv")).unwrap()
    );
    let c = dir.path().join("c");
    assert_eq!(
        code(&sechyp(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            c.to_str().unwrap()
        ])),
        0
    );
    assert_ne!(
        fs::read(a.join("cache/orbit_001.csv")).unwrap(),
        fs::read(c.join("cache/orbit_001.csv")).unwrap()
    );
}
