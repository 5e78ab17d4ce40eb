//! Run directories: data files, `report.json` and a `manifest.json` with
//! a SHA-256 digest for every file.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::process::ExitCode;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use ultrafbm::Report;

use crate::config::Config;

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config_digest: String,
    pub config: std::collections::BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn canonical(entries: &std::collections::BTreeMap<String, String>) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn write_run(
    dir: &Path,
    subcommand: &str,
    seed: u64,
    cfg: &Config,
    mut files: Vec<(String, Vec<u8>)>,
    checks: &[Report],
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({ "subcommand": subcommand, "pass": pass, "checks": checks });
    let mut text = serde_json::to_vec_pretty(&report).map_err(io::Error::other)?;
    text.push(b'\n');
    files.push((REPORT.into(), text));
    let mut entries = Vec::new();
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        entries.push(FileEntry { name: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        seed,
        config_digest: sha256_hex(cfg.canonical().as_bytes()),
        config: cfg.entries(),
        files: entries,
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?;
    text.push(b'\n');
    fs::write(dir.join(MANIFEST), text)
}

fn num(v: &Value) -> String {
    v.as_f64().map(|x| format!("{x:.4e}")).unwrap_or_else(|| "NaN".into())
}

/// One line per check: status, statistic, relation, tolerance, name.
pub fn table(checks: &[Report]) -> String {
    let rows: Vec<Value> = checks.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null)).collect();
    table_from_json(&rows)
}

fn table_from_json(rows: &[Value]) -> String {
    let mut out = String::new();
    for c in rows {
        let status = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        let rel = if c["bound"] == "at_least" { ">=" } else { "<=" };
        let params = c["parameters"]
            .as_object()
            .map(|m| m.iter().map(|(k, v)| format!("{k}={}", v.as_str().unwrap_or(""))).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{status}  {:>11} {rel} {:<11} {}  [{params}]",
            num(&c["statistic"]),
            num(&c["tolerance"]),
            c["check"].as_str().unwrap_or("?")
        );
    }
    out
}

fn integrity(dir: &Path) -> Result<(Manifest, Vec<Value>), String> {
    let text = fs::read(dir.join(MANIFEST)).map_err(|e| format!("{}: {e}", dir.join(MANIFEST).display()))?;
    let manifest: Manifest = serde_json::from_slice(&text).map_err(|e| format!("{MANIFEST} is corrupt: {e}"))?;
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.name)).map_err(|e| format!("{}: {e}", f.name))?;
        let digest = sha256_hex(&bytes);
        if digest != f.sha256 || bytes.len() as u64 != f.bytes {
            return Err(format!("{}: digest {digest} does not match manifest {}", f.name, f.sha256));
        }
    }
    if !manifest.files.iter().any(|f| f.name == REPORT) {
        return Err(format!("{REPORT} is not listed in the manifest"));
    }
    // NaN statistics serialise as null, so read loosely
    let report: Value = serde_json::from_slice(&fs::read(dir.join(REPORT)).map_err(|e| e.to_string())?)
        .map_err(|e| format!("{REPORT} is corrupt: {e}"))?;
    let checks = report["checks"].as_array().cloned().ok_or_else(|| format!("{REPORT} has no checks"))?;
    Ok((manifest, checks))
}

pub fn report(dir: &Path) -> ExitCode {
    let (manifest, checks) = match integrity(dir) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("integrity error: {e}");
            return ExitCode::from(3);
        }
    };
    if sha256_hex(canonical(&manifest.config).as_bytes()) != manifest.config_digest {
        eprintln!("warning: config digest does not match the recorded config");
    }
    println!("{} (seed {}, {} files verified)", manifest.subcommand, manifest.seed, manifest.files.len());
    print!("{}", table_from_json(&checks));
    if checks.iter().all(|c| c["pass"].as_bool() == Some(true)) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn table_marks_failures_and_nan() {
        let rows = [Report::at_most("x", &[], 0.5, 1.0), Report::at_least("y", &[], f64::NAN, 1.0)];
        let t = table(&rows);
        assert!(t.lines().next().unwrap().starts_with("PASS"));
        assert!(t.lines().nth(1).unwrap().starts_with("FAIL") && t.contains("NaN") && t.contains(">="));
    }
}
