use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ultrafbm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultrafbm")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SAMPLE: &str = "run.seed = 11\nsystem.M = 2\nsystem.c = 0.5\nsample.paths = 400\ngrid.n = 4\n";

#[test]
fn empty_and_invalid_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "empty.cfg", "# nothing\n\n");
    write(tmp.path(), "bad.cfg", "system.M = 2\nsystem.c = 7\n");
    write(tmp.path(), "typo.cfg", "system.M = 2\nsytem.c = 0.5\n");
    let o = ultrafbm(&["sample", "empty.cfg"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty config"));
    let o = ultrafbm(&["sample", "bad.cfg"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2, field 'system.c'"));
    let o = ultrafbm(&["kernel-eval", "typo.cfg"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("field 'sytem.c'"));
    assert!(!tmp.path().join("ultrafbm-out").exists());
}

#[test]
fn verify_suite_passes_and_report_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ultrafbm(&["verify", "--suite", "transition,green", "--out", "v"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("v/report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 4);
    let first = ultrafbm(&["report", "v"], tmp.path());
    let second = ultrafbm(&["report", "v"], tmp.path());
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout).contains("PASS"));
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.cfg", SAMPLE);
    for out in ["a", "b"] {
        assert_eq!(code(&ultrafbm(&["sample", "s.cfg", "--out", out], tmp.path())), 0);
    }
    for f in ["paths.csv", "paths.bin", "covariance.csv", "report.json", "manifest.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    assert_eq!(code(&ultrafbm(&["sample", "s.cfg", "--out", "c", "--seed", "12"], tmp.path())), 0);
    assert_ne!(fs::read(tmp.path().join("a/paths.bin")).unwrap(), fs::read(tmp.path().join("c/paths.bin")).unwrap());
}

#[test]
fn manifest_digests_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "s.cfg", SAMPLE);
    assert_eq!(code(&ultrafbm(&["sample", "s.cfg", "--out", "a"], tmp.path())), 0);
    let m: Value = serde_json::from_slice(&fs::read(tmp.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "sample");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["system.M"], "2");
    let names: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["paths.csv", "paths.bin", "covariance.csv", "report.json"]);
    for f in m["files"].as_array().unwrap() {
        let bytes = fs::read(tmp.path().join("a").join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"], bytes.len() as u64);
    }
}

#[test]
fn corrupted_or_missing_artifacts_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "k.cfg", "system.M = 3\nsystem.c = 1.5\n");
    for out in ["a", "b", "c"] {
        assert_eq!(code(&ultrafbm(&["kernel-eval", "k.cfg", "--out", out], tmp.path())), 0);
    }
    let csv = tmp.path().join("a/kernel.csv");
    let mut bytes = fs::read(&csv).unwrap();
    bytes[20] ^= 1;
    fs::write(&csv, bytes).unwrap();
    let o = ultrafbm(&["report", "a"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kernel.csv"));

    fs::remove_file(tmp.path().join("b/report.json")).unwrap();
    assert_eq!(code(&ultrafbm(&["report", "b"], tmp.path())), 3);

    fs::remove_file(tmp.path().join("c/manifest.json")).unwrap();
    assert_eq!(code(&ultrafbm(&["report", "c"], tmp.path())), 3);
    assert_eq!(code(&ultrafbm(&["report", "nowhere"], tmp.path())), 3);
}

#[test]
fn failing_check_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // a z tolerance of zero cannot be met by a Monte Carlo estimate
    write(tmp.path(), "s.cfg", &format!("{SAMPLE}sample.z_tol = 0\n"));
    let o = ultrafbm(&["sample", "s.cfg", "--out", "a"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
    assert_eq!(code(&ultrafbm(&["report", "a"], tmp.path())), 1);
}

#[test]
fn simulate_writes_reference_covariance() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "p.cfg",
        "system.M = 2\nsystem.c = 0.5\nparticles.T = 16\nparticles.replicas = 100\ngrid.n = 2\noutput.binary = false\n",
    );
    let o = ultrafbm(&["simulate", "p.cfg", "--out", "p"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cov = fs::read_to_string(tmp.path().join("p/covariance.csv")).unwrap();
    assert_eq!(cov.lines().next().unwrap(), "i,j,s,t,estimate,se,reference");
    assert_eq!(cov.lines().count(), 1 + 9);
    assert!(cov.lines().skip(1).all(|l| !l.ends_with(',')));
    assert!(!tmp.path().join("p/paths.bin").exists());
}
