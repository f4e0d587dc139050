use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use poolrate_core::ProblemInstance;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn poolrate(args: &[&str]) -> Output {
    poolrate_env(args, &[])
}

fn poolrate_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_poolrate"));
    cmd.args(args).env_remove("POOLRATE_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Copy of t1.json with one key rewritten.
fn t1_with(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(example("t1.json")).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join("edited.json");
    fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn examples_roundtrip_and_validate() {
    for name in ["t1.json", "t1_asym.json", "t1_marginal.json", "identity.json"] {
        let text = fs::read_to_string(example(name)).unwrap();
        let a: ProblemInstance = serde_json::from_str(&text).unwrap();
        let b: ProblemInstance = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
        let o = poolrate(&["validate", p(&example(name))]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn validate_prints_diagnostics() {
    let o = poolrate(&["validate", p(&example("t1.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("sha256"), "{out}");
}

#[test]
fn validate_with_out_writes_only_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = poolrate(&["validate", p(&example("t1.json")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec!["manifest.json"]);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["outputs"].as_array().unwrap().len(), 0);
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = t1_with(dir.path(), |v| {
        v["pool_size"] = 3.into();
    });
    let o = poolrate(&["validate", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pool_size"), "{}", stderr(&o));
}

#[test]
fn prior_that_does_not_sum_to_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = t1_with(dir.path(), |v| {
        v["p_w"] = serde_json::json!([0.5, 0.4]);
    });
    let o = poolrate(&["validate", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p_w"), "{}", stderr(&o));
}

#[test]
fn parse_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"m\": 2,\n  \"b\": ]\n}\n").unwrap();
    let o = poolrate(&["validate", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.json:3:"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = poolrate(&["validate", "/nonexistent/instance.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn per_letter_optimal_needs_a_solved_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let input = example("t1.json");
    let args = [
        "simulate",
        p(&input),
        "--out",
        p(dir.path()),
        "--k",
        "10",
        "--trials",
        "50",
        "--seed",
        "1",
        "--strategy",
        "per-letter-optimal",
        "--d",
        "mid",
    ];
    let o = poolrate(&args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("rd-solve"));

    let o = poolrate(&["rd-solve", p(&input), "--out", p(dir.path()), "--target-d", "mid"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = poolrate(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("simulation.csv").exists());
}

#[test]
fn budget_override_fails_with_exit_4() {
    let input = example("t1.json");
    let o = poolrate_env(&["oracle", p(&input), "--n", "1,2", "--d", "mid"], &[("POOLRATE_BUDGET", "3")]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    // validate only previews the range, so it degrades to a warning
    let o = poolrate_env(&["validate", p(&input)], &[("POOLRATE_BUDGET", "3")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("budget"));
}

#[test]
fn converse_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = poolrate(&[
            "converse",
            p(&example("t1.json")),
            "--out",
            p(dir.path()),
            "--theorem",
            "2",
            "--k",
            "100",
            "--d",
            "mid",
            "--eps",
            "0.1",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("converse.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn converse_missing_arguments_is_a_domain_error() {
    let o = poolrate(&["converse", p(&example("t1.json")), "--theorem", "3", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_bundle_inventory() {
    let dir = tempfile::tempdir().unwrap();
    let input = example("t1.json");
    let before = fs::read(&input).unwrap();
    let o = poolrate(&[
        "report",
        p(&input),
        "--out",
        p(dir.path()),
        "--d",
        "mid",
        "--eps",
        "0.1",
        "--k-grid",
        "10,100",
        "--trials",
        "200",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&input).unwrap(), before, "input mutated");

    let mut svg = Vec::new();
    let mut csv = Vec::new();
    let mut manifests = 0;
    for e in fs::read_dir(dir.path()).unwrap() {
        let path = e.unwrap().path();
        match path.extension().and_then(|x| x.to_str()) {
            Some("svg") => svg.push(path),
            Some("csv") => csv.push(path),
            Some("json") if path.file_name().unwrap() == "manifest.json" => manifests += 1,
            _ => {}
        }
    }
    assert_eq!(svg.len(), 3);
    assert!(csv.len() >= 3);
    assert_eq!(manifests, 1);

    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16);
    for path in &csv {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().ends_with(",config_hash"), "{}", path.display());
        for l in lines {
            assert!(l.ends_with(hash), "{}: {l}", path.display());
        }
    }
    let year = &m["started_at"].as_str().unwrap()[..4];
    for path in &svg {
        let text = fs::read_to_string(path).unwrap();
        assert!(text.starts_with("<svg") && !text.contains("href"));
        assert!(!text.contains(&format!("{year}-")), "{} has a timestamp", path.display());
    }
}
